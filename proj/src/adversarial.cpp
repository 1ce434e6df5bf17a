#include "anmf/adversarial.hpp"

#include "anmf/rng.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace anmf {

namespace {

double squared_sum(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

void check_simplex(std::span<const double> a, const char* what) {
  double sum = 0.0;
  for (double x : a) {
    if (!(x >= 0.0)) throw Error(std::string(what) + ": weights must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(std::string(what) + ": weights must sum to 1");
}

}  // namespace

WeightModel WeightModel::equal(int sources) {
  if (sources < 1) throw Error("WeightModel::equal: need at least one source");
  WeightModel wm;
  wm.values.assign(static_cast<std::size_t>(sources), 1.0 / sources);
  return wm;
}

WeightModel WeightModel::dirichlet(std::vector<double> concentration, int mc_samples) {
  WeightModel wm;
  wm.mode = Mode::dirichlet;
  wm.concentration = std::move(concentration);
  wm.mc_samples = mc_samples;
  wm.validate();
  return wm;
}

int WeightModel::sources() const {
  return static_cast<int>(mode == Mode::deterministic ? values.size() : concentration.size());
}

void WeightModel::validate() const {
  if (mode == Mode::deterministic) {
    if (values.empty()) throw Error("WeightModel: deterministic weights are empty");
    check_simplex(values, "WeightModel");
  } else {
    if (concentration.empty()) throw Error("WeightModel: dirichlet concentration is empty");
    for (double c : concentration)
      if (!(c > 0.0)) throw Error("WeightModel: dirichlet concentration must be positive");
    if (mc_samples < 1) throw Error("WeightModel: mc_samples must be at least 1");
  }
}

std::vector<double> WeightModel::draw(Rng& rng) const {
  if (mode == Mode::deterministic) return values;
  std::vector<double> a(concentration.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::gamma_distribution<double> gamma(concentration[k], 1.0);
    a[k] = gamma(rng.engine());
    sum += a[k];
  }
  if (sum <= 0.0) return WeightModel::equal(static_cast<int>(a.size())).values;
  for (double& x : a) x /= sum;
  return a;
}

double naive_gain(std::span<const double> a, int i) {
  const double denom = squared_sum(a);
  if (!(denom > 0.0)) throw Error("naive inversion: mixing weights are all zero");
  return a[static_cast<std::size_t>(i)] / denom;
}

std::vector<Vector> naive_invert(const Vector& v, std::span<const double> a) {
  const double denom = squared_sum(a);
  if (!(denom > 0.0)) throw Error("naive inversion: mixing weights are all zero");
  std::vector<Vector> out;
  out.reserve(a.size());
  for (double ai : a) out.emplace_back((ai / denom) * v);
  return out;
}

BetaEstimate estimate_beta(const WeightModel& wm, int i, std::uint64_t seed) {
  wm.validate();
  if (i < 0 || i >= wm.sources()) throw Error("compute_beta: source index out of range");
  if (wm.mode == WeightModel::Mode::deterministic) {
    const double g = naive_gain(wm.values, i);
    return {g * g, 0.0};
  }
  Rng rng(seed);
  // Welford running mean/variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (int n = 1; n <= wm.mc_samples; ++n) {
    const auto a = wm.draw(rng);
    const double g = naive_gain(a, i);
    const double x = g * g;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
  const double var = wm.mc_samples > 1 ? m2 / (wm.mc_samples - 1) : 0.0;
  return {mean, std::sqrt(var / wm.mc_samples)};
}

double compute_beta(const WeightModel& wm, int i, std::uint64_t seed) {
  return estimate_beta(wm, i, seed).mean;
}

OmegaWeights OmegaWeights::from_matrix(Matrix omega) {
  if (omega.rows() != omega.cols())
    throw_dimension("OmegaWeights", "omega", omega.rows(), omega.cols(), "square", omega.rows(),
                    omega.rows());
  OmegaWeights om;
  om.residual.resize(omega.rows());
  for (Index i = 0; i < omega.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < omega.cols(); ++j)
      if (j != i) s += omega(i, j);
    om.residual(i) = 1.0 - s;
  }
  om.omega = std::move(omega);
  om.validate();
  return om;
}

void OmegaWeights::validate() const {
  for (Index i = 0; i < omega.rows(); ++i) {
    for (Index j = 0; j < omega.cols(); ++j)
      if (j != i && !(omega(i, j) >= 0.0)) throw Error("OmegaWeights: negative weight");
    // Small negative residuals are rounding from ratios summing to one.
    if (!(residual(i) >= -1e-12)) throw Error("OmegaWeights: weights of a row exceed 1");
  }
}

OmegaWeights default_omega(std::span<const Index> counts, Index n_mix) {
  const Index S = static_cast<Index>(counts.size());
  const Index total = std::accumulate(counts.begin(), counts.end(), Index{0});
  if (n_mix < 0) throw Error("default_omega: negative mix count");
  OmegaWeights om;
  om.omega = Matrix::Zero(S, S);
  om.residual = Vector::Zero(S);
  for (Index i = 0; i < S; ++i) {
    if (counts[static_cast<std::size_t>(i)] < 0) throw Error("default_omega: negative count");
    const Index nhat = n_mix + total - counts[static_cast<std::size_t>(i)];
    if (nhat <= 0) {
      std::ostringstream os;
      os << "default_omega: source " << i << " has no adversarial data";
      throw Error(os.str());
    }
    for (Index j = 0; j < S; ++j)
      if (j != i)
        om.omega(i, j) =
            static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(nhat);
    om.residual(i) = static_cast<double>(n_mix) / static_cast<double>(nhat);
  }
  return om;
}

OmegaWeights omega_with_mix_weight(std::span<const Index> counts, Index n_mix,
                                   double mix_weight) {
  if (!(mix_weight >= 0.0 && mix_weight <= 1.0))
    throw Error("omega_with_mix_weight: mix weight must lie in [0, 1]");
  const Index S = static_cast<Index>(counts.size());
  const Index total = std::accumulate(counts.begin(), counts.end(), Index{0});
  OmegaWeights om;
  om.omega = Matrix::Zero(S, S);
  om.residual = Vector::Zero(S);
  for (Index i = 0; i < S; ++i) {
    const Index others = total - counts[static_cast<std::size_t>(i)];
    const double r = n_mix > 0 ? (others > 0 ? mix_weight : 1.0) : 0.0;
    for (Index j = 0; j < S; ++j)
      if (j != i && others > 0)
        om.omega(i, j) = (1.0 - r) * static_cast<double>(counts[static_cast<std::size_t>(j)]) /
                         static_cast<double>(others);
    om.residual(i) = r;
  }
  return om;
}

AdversarialSet assemble_adversarial(int i, std::span<const Matrix> sources, const Matrix& mixes,
                                    const OmegaWeights& om, double beta_i) {
  const auto S = static_cast<Index>(sources.size());
  if (i < 0 || i >= S) throw Error("assemble_adversarial: source index out of range");
  if (om.omega.rows() != S)
    throw_dimension("assemble_adversarial", "omega", om.omega.rows(), om.omega.cols(), "sources",
                    S, S);
  if (!(beta_i >= 0.0)) throw Error("assemble_adversarial: beta must be non-negative");

  Index m = -1;
  auto check_rows = [&](const Matrix& x, const char* name) {
    if (x.cols() == 0) return;
    if (m < 0) m = x.rows();
    else if (x.rows() != m)
      throw_dimension("assemble_adversarial", name, x.rows(), x.cols(), "other data", m, 0);
  };
  for (const auto& u : sources) check_rows(u, "source");
  check_rows(mixes, "mixes");
  if (m < 0) m = sources[static_cast<std::size_t>(i)].rows();

  const Index n_mix = mixes.cols();
  Index nhat = n_mix;
  for (Index j = 0; j < S; ++j)
    if (j != i) nhat += sources[static_cast<std::size_t>(j)].cols();

  auto snap = [](double alpha_sq) {
    return std::abs(alpha_sq - 1.0) <= 1e-14 ? 1.0 : std::sqrt(alpha_sq);
  };

  AdversarialSet out;
  std::vector<std::pair<const Matrix*, AdversarialSegment>> blocks;
  Index cursor = 0;
  for (Index j = 0; j < S; ++j) {
    if (j == i) continue;
    const Matrix& uj = sources[static_cast<std::size_t>(j)];
    const double w = om.omega(i, j);
    if (uj.cols() == 0) {
      if (w > 0.0) {
        std::ostringstream os;
        os << "assemble_adversarial: omega(" << i << "," << j
           << ") > 0 but source " << j << " has no data";
        throw Error(os.str());
      }
      continue;
    }
    const double alpha = snap(w * static_cast<double>(nhat) / static_cast<double>(uj.cols()));
    blocks.push_back({&uj, {static_cast<int>(j), cursor, cursor + uj.cols(), alpha}});
    cursor += uj.cols();
  }
  if (n_mix > 0) {
    const double alpha = snap(std::max(om.residual(i), 0.0) * static_cast<double>(nhat) * beta_i /
                              static_cast<double>(n_mix));
    blocks.push_back({&mixes, {kMixOrigin, cursor, cursor + n_mix, alpha}});
    cursor += n_mix;
  }

  out.matrix.resize(m, cursor);
  for (const auto& [src, seg] : blocks) {
    if (seg.alpha == 1.0) out.matrix.middleCols(seg.begin, seg.end - seg.begin) = *src;
    else out.matrix.middleCols(seg.begin, seg.end - seg.begin) = seg.alpha * *src;
    out.segments.push_back(seg);
  }
  return out;
}

}  // namespace anmf
