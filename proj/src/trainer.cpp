#include "anmf/trainer.hpp"

#include "anmf/kernels.hpp"
#include "anmf/separator.hpp"

#include <algorithm>
#include <exception>
#include <sstream>

namespace anmf {

namespace {

enum class Term { weak, adversarial, supervised };

struct ActiveTerms {
  bool weak = false;
  bool adversarial = false;
  bool supervised = false;
};

ActiveTerms active_terms(const TrainSpec& spec) {
  return {spec.tau_S < 1.0, spec.tau_S < 1.0 && spec.tau_A > 0.0, spec.tau_S > 0.0};
}

Term resolve_anchor(SampleAnchor requested, const ActiveTerms& act) {
  switch (requested) {
    case SampleAnchor::true_data:
      if (act.weak) return Term::weak;
      break;
    case SampleAnchor::adversarial:
      if (act.adversarial) return Term::adversarial;
      break;
    case SampleAnchor::supervised:
      if (act.supervised) return Term::supervised;
      break;
  }
  if (act.weak) return Term::weak;
  if (act.adversarial) return Term::adversarial;
  return Term::supervised;
}

Index stacked_offset(const std::vector<Basis>& bases, int source) {
  Index off = 0;
  for (int k = 0; k < source; ++k) off += bases[static_cast<std::size_t>(k)].cols();
  return off;
}

// Column sets are sorted so a batch depends only on which columns it holds.
std::vector<Index> anchor_batch(const std::vector<Index>& perm, Index b, Index batch_size) {
  const auto n = static_cast<Index>(perm.size());
  const Index begin = b * batch_size;
  const Index end = std::min(n, begin + batch_size);
  std::vector<Index> cols(perm.begin() + begin, perm.begin() + end);
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::vector<Index> cyclic_batch(const std::vector<Index>& perm, Index b, Index batch_size) {
  const auto n = static_cast<Index>(perm.size());
  const Index len = std::min(batch_size, n);
  std::vector<Index> cols(static_cast<std::size_t>(len));
  for (Index k = 0; k < len; ++k)
    cols[static_cast<std::size_t>(k)] = perm[static_cast<std::size_t>((b * len + k) % n)];
  std::sort(cols.begin(), cols.end());
  return cols;
}

void require_term(bool ok, const std::string& what) {
  if (!ok) throw Error("train: " + what);
}

void check_data(const TrainData& data, const TrainSpec& spec) {
  const int S = data.source_count();
  const ActiveTerms act = active_terms(spec);
  const Index m = data.rows();
  auto check_matrix = [&](const Matrix& x, const std::string& name) {
    if (x.cols() == 0) return;
    if (x.rows() != m) throw_dimension("train", name, x.rows(), x.cols(), "first dataset", m, 0);
    if (!is_nonnegative(x)) throw Error("train: " + name + " has negative entries");
  };
  for (std::size_t i = 0; i < data.sources.size(); ++i)
    check_matrix(data.sources[i], "weak data of source " + std::to_string(i));
  for (std::size_t i = 0; i < data.adversarial.size(); ++i)
    check_matrix(data.adversarial[i].matrix, "adversarial data of source " + std::to_string(i));
  for (std::size_t i = 0; i < data.supervised.size(); ++i)
    check_matrix(data.supervised[i], "supervised data of source " + std::to_string(i));
  check_matrix(data.supervised_mix, "supervised mixes");

  if (act.weak) {
    require_term(static_cast<int>(data.sources.size()) == S,
                 "weak supervision term needs data for every source");
    for (int i = 0; i < S; ++i)
      require_term(data.sources[static_cast<std::size_t>(i)].cols() > 0,
                   "weak supervision data of source " + std::to_string(i) + " is empty");
  }
  if (act.adversarial) {
    require_term(static_cast<int>(data.adversarial.size()) == S,
                 "adversarial term (tau_A > 0) needs an adversarial set for every source");
    for (int i = 0; i < S; ++i)
      require_term(data.adversarial[static_cast<std::size_t>(i)].cols() > 0,
                   "adversarial data of source " + std::to_string(i) + " is empty");
  }
  if (act.supervised) {
    require_term(static_cast<int>(data.supervised.size()) == S,
                 "supervised term (tau_S > 0) needs supervised components for every source");
    const Index n_sup = data.supervised_mix.cols();
    require_term(n_sup > 0, "supervised mixes are empty");
    for (int i = 0; i < S; ++i)
      if (data.supervised[static_cast<std::size_t>(i)].cols() != n_sup)
        throw_dimension("train", "supervised source", data.supervised[static_cast<std::size_t>(i)].rows(),
                        data.supervised[static_cast<std::size_t>(i)].cols(), "supervised mixes", m,
                        n_sup);
  }
}

Latents initial_latents(const Matrix& W, const Matrix& U, const SparsityParams& p) {
  if (U.cols() == 0) return Latents(W.cols(), 0);
  return update_latents(Latents::Ones(W.cols(), U.cols()), W, U, p,
                        static_cast<double>(U.cols()));
}

void normalize_source(TrainState& st, int i) {
  const auto ui = static_cast<std::size_t>(i);
  std::vector<Matrix*> partners;
  if (st.latents_true[ui].cols() > 0) partners.push_back(&st.latents_true[ui]);
  if (st.latents_adv[ui].cols() > 0) partners.push_back(&st.latents_adv[ui]);
  const Vector scales = normalize_columns(st.bases[ui].entries, partners);
  if (st.latents_sup.cols() > 0) scale_rows(st.latents_sup, scales, stacked_offset(st.bases, i));
}

// Latent updates and batched basis updates of one source within an epoch.
void train_source(TrainState& st, const TrainData& data, const TrainSpec& spec, int i,
                  const std::vector<Index>& sup_perm, TermCounters& counters) {
  const auto ui = static_cast<std::size_t>(i);
  const ActiveTerms act = active_terms(spec);
  const SparsityParams& p = spec.sparsity;
  Matrix& W = st.bases[ui].entries;
  Rng& rng = st.source_rngs[ui];

  normalize_source(st, i);
  if (act.weak)
    st.latents_true[ui] = update_latents(st.latents_true[ui], W, data.sources[ui], p,
                                         static_cast<double>(data.sources[ui].cols()));
  if (act.adversarial)
    st.latents_adv[ui] = update_latents(st.latents_adv[ui], W, data.adversarial[ui].matrix, p,
                                        static_cast<double>(data.adversarial[ui].cols()));

  std::vector<Index> weak_perm;
  std::vector<Index> adv_perm;
  if (act.weak) weak_perm = rng.permutation(data.sources[ui].cols());
  if (act.adversarial) adv_perm = rng.permutation(data.adversarial[ui].cols());

  const Term anchor = resolve_anchor(spec.sample_anchor, act);
  const Index n_anchor = anchor == Term::weak          ? data.sources[ui].cols()
                         : anchor == Term::adversarial ? data.adversarial[ui].cols()
                                                       : data.supervised_mix.cols();
  const Index bs = spec.batch_size;
  const Index batches = std::max<Index>(1, (n_anchor + bs - 1) / bs);

  auto columns = [&](Term t, const std::vector<Index>& perm, Index b) {
    return t == anchor ? anchor_batch(perm, b, bs) : cyclic_batch(perm, b, bs);
  };

  Latents sup_block;
  if (act.supervised)
    sup_block = st.latents_sup.middleRows(stacked_offset(st.bases, i), W.cols());
  const double gamma = spec.gamma_of(i);

  for (Index b = 0; b < batches; ++b) {
    GradParts weak_parts;
    GradParts adv_parts;
    GradParts sup_parts;
    if (act.weak) {
      const auto cols = columns(Term::weak, weak_perm, b);
      weak_parts = grad_parts_std(W, kernels::gather_columns(data.sources[ui], cols),
                                  kernels::gather_columns(st.latents_true[ui], cols),
                                  static_cast<Index>(cols.size()));
      ++counters.std_parts;
    }
    if (act.adversarial) {
      const auto cols = columns(Term::adversarial, adv_perm, b);
      adv_parts = grad_parts_adv(W, kernels::gather_columns(data.adversarial[ui].matrix, cols),
                                 kernels::gather_columns(st.latents_adv[ui], cols), spec.tau_A,
                                 static_cast<Index>(cols.size()));
      ++counters.adv_parts;
    }
    if (act.supervised) {
      const auto cols = columns(Term::supervised, sup_perm, b);
      sup_parts = grad_parts_sup(W, kernels::gather_columns(data.supervised[ui], cols),
                                 kernels::gather_columns(sup_block, cols),
                                 static_cast<Index>(cols.size()));
      if (gamma != 1.0) {
        sup_parts.plus *= gamma;
        sup_parts.minus *= gamma;
      }
      ++counters.sup_parts;
    }
    W = update_basis(W, weak_parts, adv_parts, sup_parts, spec.tau_S, p.mu_W, p.eps);
  }
}

double l1(const Matrix& m) { return m.cwiseAbs().sum(); }

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::nmf: return "nmf";
    case Method::anmf: return "anmf";
    case Method::dnmf: return "dnmf";
    case Method::danmf: return "danmf";
  }
  return "?";
}

const char* to_string(InitMode m) { return m == InitMode::exemplar ? "exemplar" : "random"; }

const char* to_string(SampleAnchor a) {
  switch (a) {
    case SampleAnchor::true_data: return "true_data";
    case SampleAnchor::adversarial: return "adversarial";
    case SampleAnchor::supervised: return "supervised";
  }
  return "?";
}

Method classify(double tau_A, double tau_S) {
  if (tau_S == 1.0) return Method::dnmf;
  if (tau_S == 0.0) return tau_A > 0.0 ? Method::anmf : Method::nmf;
  return Method::danmf;
}

Index TrainSpec::latent_dim(int source) const {
  if (d.size() == 1) return d.front();
  return d.at(static_cast<std::size_t>(source));
}

double TrainSpec::gamma_of(int source) const {
  if (gamma.empty()) return 1.0;
  if (gamma.size() == 1) return gamma.front();
  return gamma.at(static_cast<std::size_t>(source));
}

WeightModel TrainSpec::weights_for(int sources) const {
  if (weight_model) return *weight_model;
  return WeightModel::equal(sources);
}

void TrainSpec::validate(int sources) const {
  if (sources < 1) throw Error("TrainSpec: need at least one source");
  if (d.empty() || (d.size() != 1 && static_cast<int>(d.size()) != sources))
    throw Error("TrainSpec: d must have one entry or one per source");
  for (Index x : d)
    if (x < 1) throw Error("TrainSpec: latent dimension must be at least 1");
  if (!(tau_A >= 0.0)) throw Error("TrainSpec: tau_A must be non-negative");
  if (!(tau_S >= 0.0 && tau_S <= 1.0)) throw Error("TrainSpec: tau_S must lie in [0, 1]");
  if (!gamma.empty() && gamma.size() != 1 && static_cast<int>(gamma.size()) != sources)
    throw Error("TrainSpec: gamma must have one entry or one per source");
  for (double g : gamma)
    if (!(g > 0.0)) throw Error("TrainSpec: gamma entries must be positive");
  sparsity.validate();
  if (epochs < 0) throw Error("TrainSpec: epochs must be non-negative");
  if (batch_size < 1) throw Error("TrainSpec: batch_size must be at least 1");
  if (omega && (omega->rows() != sources || omega->cols() != sources))
    throw Error("TrainSpec: omega must be S x S");
  if (omega_mix && !(*omega_mix >= 0.0 && *omega_mix <= 1.0))
    throw Error("TrainSpec: omega_mix must lie in [0, 1]");
  if (weight_model) {
    weight_model->validate();
    if (weight_model->sources() != sources)
      throw Error("TrainSpec: weight model size does not match the number of sources");
  }
  if (test_solver.max_iter < 0) throw Error("TrainSpec: test max_iter must be non-negative");
}

int TrainData::source_count() const {
  if (!sources.empty()) return static_cast<int>(sources.size());
  if (!supervised.empty()) return static_cast<int>(supervised.size());
  return static_cast<int>(adversarial.size());
}

Index TrainData::rows() const {
  for (const auto& u : sources)
    if (u.cols() > 0) return u.rows();
  for (const auto& u : supervised)
    if (u.cols() > 0) return u.rows();
  for (const auto& a : adversarial)
    if (a.cols() > 0) return a.matrix.rows();
  return supervised_mix.rows();
}

TrainData make_train_data(std::vector<Matrix> sources, const Matrix& mixes, const TrainSpec& spec,
                          std::vector<Matrix> supervised, Matrix supervised_mix) {
  TrainData data;
  data.sources = std::move(sources);
  data.supervised = std::move(supervised);
  if (!data.supervised.empty() && supervised_mix.size() == 0) {
    supervised_mix = data.supervised.front();
    for (std::size_t k = 1; k < data.supervised.size(); ++k) supervised_mix += data.supervised[k];
  }
  data.supervised_mix = std::move(supervised_mix);

  if (spec.tau_A > 0.0 && spec.tau_S < 1.0) {
    const int S = static_cast<int>(data.sources.size());
    std::vector<Index> counts;
    for (const auto& u : data.sources) counts.push_back(u.cols());
    OmegaWeights om = spec.omega       ? OmegaWeights::from_matrix(*spec.omega)
                      : spec.omega_mix ? omega_with_mix_weight(counts, mixes.cols(), *spec.omega_mix)
                                       : default_omega(counts, mixes.cols());
    const WeightModel wm = spec.weights_for(S);
    for (int i = 0; i < S; ++i) {
      const double beta =
          mixes.cols() > 0 ? compute_beta(wm, i, derive_seed(spec.seed, 5000 + i)) : 0.0;
      data.adversarial.push_back(assemble_adversarial(i, data.sources, mixes, om, beta));
    }
  }
  return data;
}

GradParts grad_parts_std(const Matrix& W, const Matrix& U, const Latents& H, Index n) {
  if (n <= 0) throw Error("grad_parts_std: column count must be positive");
  require_rows_match("grad_parts_std", "W", W, "U", U);
  if (W.cols() != H.rows())
    throw_dimension("grad_parts_std", "W", W.rows(), W.cols(), "H", H.rows(), H.cols());
  require_cols_match("grad_parts_std", "U", U, "H", H);
  const double dn = static_cast<double>(n);
  return {kernels::a_b(W, kernels::a_bt(H, H)) / dn, kernels::a_bt(U, H) / dn};
}

GradParts grad_parts_adv(const Matrix& W, const Matrix& Uhat, const Latents& Hhat, double tau_A,
                         Index nhat) {
  if (nhat <= 0) throw Error("grad_parts_adv: column count must be positive");
  if (!(tau_A >= 0.0)) throw Error("grad_parts_adv: tau_A must be non-negative");
  require_rows_match("grad_parts_adv", "W", W, "Uhat", Uhat);
  if (W.cols() != Hhat.rows())
    throw_dimension("grad_parts_adv", "W", W.rows(), W.cols(), "Hhat", Hhat.rows(), Hhat.cols());
  require_cols_match("grad_parts_adv", "Uhat", Uhat, "Hhat", Hhat);
  const double dn = static_cast<double>(nhat);
  return {tau_A * kernels::a_bt(Uhat, Hhat) / dn,
          tau_A * kernels::a_b(W, kernels::a_bt(Hhat, Hhat)) / dn};
}

GradParts grad_parts_sup(const Matrix& W, const Matrix& Usup, const Latents& Hsup, Index n_sup) {
  if (n_sup <= 0) throw Error("grad_parts_sup: column count must be positive");
  require_rows_match("grad_parts_sup", "W", W, "Usup", Usup);
  if (W.cols() != Hsup.rows())
    throw_dimension("grad_parts_sup", "W", W.rows(), W.cols(), "Hsup", Hsup.rows(), Hsup.cols());
  require_cols_match("grad_parts_sup", "Usup", Usup, "Hsup", Hsup);
  const double dn = static_cast<double>(n_sup);
  return {kernels::a_b(W, kernels::a_bt(Hsup, Hsup)) / dn, kernels::a_bt(Usup, Hsup) / dn};
}

Matrix update_basis(const Matrix& W, const GradParts& std_parts, const GradParts& adv_parts,
                    const GradParts& sup_parts, double tau_S, double mu_W, double eps) {
  for (const GradParts* g : {&std_parts, &adv_parts, &sup_parts}) {
    if (g->empty()) continue;
    require_same_shape("update_basis", "W", W, "gradient part", g->plus);
    require_same_shape("update_basis", "W", W, "gradient part", g->minus);
  }
  Matrix num;
  Matrix den;
  if (!std_parts.empty() || !adv_parts.empty()) {
    Matrix minus;
    Matrix plus;
    if (std_parts.empty()) {
      minus = adv_parts.minus;
      plus = adv_parts.plus;
    } else if (adv_parts.empty()) {
      minus = std_parts.minus;
      plus = std_parts.plus;
    } else {
      minus = std_parts.minus + adv_parts.minus;
      plus = std_parts.plus + adv_parts.plus;
    }
    num = (1.0 - tau_S) * minus;
    den = (1.0 - tau_S) * plus;
  } else {
    num = Matrix::Zero(W.rows(), W.cols());
    den = Matrix::Zero(W.rows(), W.cols());
  }
  if (!sup_parts.empty()) {
    num += tau_S * sup_parts.minus;
    den += tau_S * sup_parts.plus;
  }
  Matrix out = W;
  kernels::multiplicative_step(out, num, den, mu_W + eps);
  return out;
}

std::uint64_t init_seed(std::uint64_t master, int source) {
  return derive_seed(master, 1000 + static_cast<std::uint64_t>(source));
}

std::uint64_t shuffle_seed(std::uint64_t master, int source) {
  return derive_seed(master, static_cast<std::uint64_t>(source));
}

TrainState initialize(const TrainData& data, const TrainSpec& spec) {
  const int S = data.source_count();
  spec.validate(S);
  check_data(data, spec);
  const Index m = data.rows();
  if (m < 1) throw Error("train: no data");
  const SparsityParams& p = spec.sparsity;

  TrainState st;
  st.rng = Rng(spec.seed);
  for (int i = 0; i < S; ++i) {
    st.source_rngs.emplace_back(shuffle_seed(spec.seed, i));
    const auto ui = static_cast<std::size_t>(i);
    const Index d = spec.latent_dim(i);
    const Matrix* pool = nullptr;
    if (ui < data.sources.size() && data.sources[ui].cols() > 0) pool = &data.sources[ui];
    else if (ui < data.supervised.size() && data.supervised[ui].cols() > 0)
      pool = &data.supervised[ui];
    if (spec.init == InitMode::exemplar && pool != nullptr)
      st.bases.push_back(init_exemplar(*pool, d, init_seed(spec.seed, i), i));
    else
      st.bases.push_back(init_random(m, d, init_seed(spec.seed, i), i));
  }
  for (int i = 0; i < S; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Matrix& W = st.bases[ui].entries;
    st.latents_true.push_back(ui < data.sources.size() ? initial_latents(W, data.sources[ui], p)
                                                       : Latents(W.cols(), 0));
    st.latents_adv.push_back(ui < data.adversarial.size()
                                 ? initial_latents(W, data.adversarial[ui].matrix, p)
                                 : Latents(W.cols(), 0));
  }
  if (data.supervised_mix.cols() > 0 && static_cast<int>(data.supervised.size()) == S)
    st.latents_sup = initial_latents(concat_bases(st.bases), data.supervised_mix, p);
  st.history.push_back(objective(st, data, spec).weighted);
  return st;
}

void run_epoch(TrainState& st, const TrainData& data, const TrainSpec& spec) {
  const int S = static_cast<int>(st.bases.size());
  const ActiveTerms act = active_terms(spec);

  std::vector<Index> sup_perm;
  if (act.supervised) {
    st.latents_sup = update_latents(st.latents_sup, concat_bases(st.bases), data.supervised_mix,
                                    spec.sparsity, static_cast<double>(data.supervised_mix.cols()));
    sup_perm = st.rng.permutation(data.supervised_mix.cols());
  }

  // Sources are independent unless the supervised term couples them.
  const bool parallel_sources = !act.supervised && S > 1;
  std::vector<TermCounters> counters(static_cast<std::size_t>(S));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(S));
#pragma omp parallel for schedule(dynamic) if (parallel_sources)
  for (int i = 0; i < S; ++i) {
    try {
      train_source(st, data, spec, i, sup_perm, counters[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& c : counters) {
    st.counters.std_parts += c.std_parts;
    st.counters.adv_parts += c.adv_parts;
    st.counters.sup_parts += c.sup_parts;
  }

  for (int i = 0; i < S; ++i) normalize_source(st, i);
  ++st.epoch;
  st.history.push_back(objective(st, data, spec).weighted);
}

TrainState train_smu(const TrainData& data, const TrainSpec& spec) {
  TrainState st = initialize(data, spec);
  for (int e = 0; e < spec.epochs; ++e) run_epoch(st, data, spec);
  return st;
}

Objective objective(const TrainState& st, const TrainData& data, const TrainSpec& spec) {
  const int S = static_cast<int>(st.bases.size());
  const ActiveTerms act = active_terms(spec);
  Objective out;
  out.per_source.resize(static_cast<std::size_t>(S));
  for (int i = 0; i < S; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Matrix& W = st.bases[ui].entries;
    double f = 0.0;
    if (act.weak && ui < data.sources.size() && data.sources[ui].cols() > 0)
      f += (1.0 - spec.tau_S) *
           kernels::squared_residual(data.sources[ui], W, st.latents_true[ui]) /
           static_cast<double>(data.sources[ui].cols());
    if (act.adversarial && ui < data.adversarial.size() && data.adversarial[ui].cols() > 0)
      f -= (1.0 - spec.tau_S) * spec.tau_A *
           kernels::squared_residual(data.adversarial[ui].matrix, W, st.latents_adv[ui]) /
           static_cast<double>(data.adversarial[ui].cols());
    if (act.supervised && st.latents_sup.cols() > 0)
      f += spec.tau_S *
           kernels::squared_residual(data.supervised[ui], W,
                                     st.latents_sup.middleRows(stacked_offset(st.bases, i), W.cols())) /
           static_cast<double>(data.supervised_mix.cols());
    f += spec.sparsity.mu_W * l1(W);
    out.per_source[ui] = f;
    out.weighted += spec.gamma_of(i) * f;
  }
  return out;
}

SemiResult train_semisupervised(const Matrix& V, std::span<const Basis> pretrained,
                                const TrainSpec& spec) {
  const int S = static_cast<int>(pretrained.size()) + 1;
  spec.validate(S);
  if (V.cols() == 0) throw Error("train_semisupervised: mixed data is empty");
  if (!is_nonnegative(V)) throw Error("train_semisupervised: mixed data has negative entries");
  for (const auto& b : pretrained) require_rows_match("train_semisupervised", "basis", b.entries, "V", V);

  const int last = S - 1;
  const Index d_last = spec.latent_dim(last);
  const SparsityParams& p = spec.sparsity;
  const auto n = V.cols();
  const double dn = static_cast<double>(n);

  SemiResult out;
  out.basis = spec.init == InitMode::exemplar
                  ? init_exemplar(V, d_last, init_seed(spec.seed, last), last)
                  : init_random(V.rows(), d_last, init_seed(spec.seed, last), last);
  Matrix& WS = out.basis.entries;
  Rng rng(shuffle_seed(spec.seed, last));

  std::vector<Basis> all(pretrained.begin(), pretrained.end());
  all.push_back(out.basis);
  Matrix Wcat = concat_bases(all);
  const Index off_last = Wcat.cols() - d_last;

  auto semi_objective = [&](const Latents& H) {
    return kernels::squared_residual(V, Wcat, H) / dn + p.mu_W * l1(WS);
  };

  out.latents = update_latents(Latents::Ones(Wcat.cols(), n), Wcat, V, p, dn);
  out.history.push_back(semi_objective(out.latents));

  for (int e = 0; e < spec.epochs; ++e) {
    scale_rows(out.latents, normalize_columns(WS, {}), off_last);
    Wcat.rightCols(d_last) = WS;
    out.latents = update_latents(out.latents, Wcat, V, p, dn);

    const auto perm = rng.permutation(n);
    const Index batches = (n + spec.batch_size - 1) / spec.batch_size;
    for (Index b = 0; b < batches; ++b) {
      const auto cols = anchor_batch(perm, b, spec.batch_size);
      const Matrix Vb = kernels::gather_columns(V, cols);
      const Latents Hb = kernels::gather_columns(out.latents, cols);
      const Latents HSb = Hb.bottomRows(d_last);
      const auto nb = static_cast<Index>(cols.size());
      GradParts parts;
      if (S == 1) {
        parts = grad_parts_std(WS, Vb, HSb, nb);
      } else {
        // (sum_i W_i H_i) H_S^T, accumulated per source.
        Matrix model_h = Matrix::Zero(WS.rows(), d_last);
        Index off = 0;
        for (int k = 0; k < S; ++k) {
          const Index dk = k == last ? d_last : pretrained[static_cast<std::size_t>(k)].cols();
          const Matrix& Wk = k == last ? WS : pretrained[static_cast<std::size_t>(k)].entries;
          model_h += kernels::a_b(Wk, kernels::a_bt(Hb.middleRows(off, dk), HSb));
          off += dk;
        }
        parts.plus = model_h / static_cast<double>(nb);
        parts.minus = kernels::a_bt(Vb, HSb) / static_cast<double>(nb);
      }
      WS = update_basis(WS, parts, {}, {}, 0.0, p.mu_W, p.eps);
      Wcat.rightCols(d_last) = WS;
    }
    scale_rows(out.latents, normalize_columns(WS, {}), off_last);
    Wcat.rightCols(d_last) = WS;
    out.history.push_back(semi_objective(out.latents));
  }
  return out;
}

}  // namespace anmf
