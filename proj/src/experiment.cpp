#include "anmf/experiment.hpp"

#include "anmf/kernels.hpp"
#include "anmf/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace anmf {

namespace fs = std::filesystem;

namespace {

std::string basis_file(int i) { return "basis_" + std::to_string(i) + ".anmf"; }

Json history_to_json(const std::vector<double>& h) {
  Json out = Json::array();
  for (double x : h) {
    if (std::isfinite(x)) out.push_back(x);
    else out.push_back(nullptr);
  }
  return out;
}

std::vector<double> history_from_json(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j)
    out.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  return out;
}

bool is_idx_name(const fs::path& p) {
  const std::string name = p.filename().string();
  return p.extension() == ".idx" || name.ends_with("-ubyte");
}

std::vector<Index> all_columns(Index n) {
  std::vector<Index> c(static_cast<std::size_t>(n));
  std::iota(c.begin(), c.end(), Index{0});
  return c;
}

}  // namespace

void save_bundle(const fs::path& dir, const ModelBundle& bundle) {
  if (bundle.bases.empty()) throw Error("save_bundle: no bases");
  fs::create_directories(dir);
  Json d = Json::array();
  Json files = Json::array();
  for (int i = 0; i < bundle.sources(); ++i) {
    const Basis& b = bundle.bases[static_cast<std::size_t>(i)];
    if (b.rows() != bundle.rows()) throw Error("save_bundle: bases differ in row count");
    d.push_back(b.cols());
    files.push_back(basis_file(i));
    save_matrix(dir / basis_file(i), b.entries);
  }
  const Json manifest{{"format", "anmf-model"},
                      {"version", 1},
                      {"method", bundle.method},
                      {"S", bundle.sources()},
                      {"m", bundle.rows()},
                      {"d", d},
                      {"bases", files},
                      {"spec", spec_to_json(bundle.spec)},
                      {"history", history_to_json(bundle.history)},
                      {"metadata", Json::object()}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

ModelBundle load_bundle(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("cannot open model manifest in " + dir.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  }
  if (j.value("format", "") != "anmf-model") throw FormatError(dir.string() + ": not a model bundle");
  ModelBundle b;
  b.method = j.value("method", "nmf");
  b.spec = spec_from_json(j.at("spec"));
  b.history = history_from_json(j.value("history", Json::array()));
  const int S = j.at("S").get<int>();
  const auto m = j.at("m").get<Index>();
  const auto d = j.at("d").get<std::vector<Index>>();
  const auto files = j.at("bases").get<std::vector<std::string>>();
  if (static_cast<int>(d.size()) != S || static_cast<int>(files.size()) != S)
    throw FormatError(dir.string() + ": manifest lists " + std::to_string(files.size()) +
                      " bases for S = " + std::to_string(S));
  for (int i = 0; i < S; ++i) {
    Basis basis;
    basis.source_id = i;
    basis.entries = load_matrix(dir / files[static_cast<std::size_t>(i)]);
    if (basis.rows() != m || basis.cols() != d[static_cast<std::size_t>(i)])
      throw FormatError(dir.string() + ": basis " + std::to_string(i) + " is " + shape_of(basis) +
                        ", manifest says " + shape_string(m, d[static_cast<std::size_t>(i)]));
    b.bases.push_back(std::move(basis));
  }
  return b;
}

Matrix load_data(const fs::path& path, NegativePolicy policy) {
  if (is_idx_name(path)) return load_idx_images(path).entries;
  return load_nonnegative(path, policy);
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg, NegativePolicy policy) {
  ExperimentData data;
  for (const auto& p : cfg.sources) data.sources.push_back(load_data(p, policy));
  for (const auto& p : cfg.supervised) data.supervised.push_back(load_data(p, policy));
  if (cfg.supervised_mix) data.supervised_mix = load_data(*cfg.supervised_mix, policy);
  for (std::size_t i = 0; i < cfg.pretrained.size(); ++i) {
    Basis b;
    b.source_id = static_cast<int>(i);
    b.entries = load_data(cfg.pretrained[i], policy);
    data.pretrained.push_back(std::move(b));
  }
  const Index m = !data.sources.empty()      ? data.sources.front().rows()
                  : !data.supervised.empty() ? data.supervised.front().rows()
                  : !data.pretrained.empty() ? data.pretrained.front().rows()
                                             : 0;
  data.mixes = cfg.mixes ? load_data(*cfg.mixes, policy) : Matrix(m, 0);
  return data;
}

ModelBundle train_model(const ExperimentConfig& cfg, const TrainSpec& spec,
                        const ExperimentData& data, std::span<const Index> supervised_cols) {
  ModelBundle bundle;
  bundle.method = cfg.method;
  bundle.spec = spec;

  if (cfg.method == "semi") {
    SemiResult r = train_semisupervised(data.mixes, data.pretrained, spec);
    bundle.bases = data.pretrained;
    r.basis.source_id = static_cast<int>(bundle.bases.size());
    bundle.bases.push_back(std::move(r.basis));
    bundle.history = std::move(r.history);
    return bundle;
  }

  std::vector<Matrix> supervised;
  Matrix supervised_mix;
  if (spec.tau_S > 0.0) {
    const auto cols = supervised_cols.empty()
                          ? all_columns(data.supervised_mix.cols())
                          : std::vector<Index>(supervised_cols.begin(), supervised_cols.end());
    for (const auto& s : data.supervised) supervised.push_back(kernels::gather_columns(s, cols));
    supervised_mix = kernels::gather_columns(data.supervised_mix, cols);
  }
  const TrainData td = make_train_data(data.sources, data.mixes, spec, std::move(supervised),
                                       std::move(supervised_mix));
  TrainState st = train_smu(td, spec);
  bundle.bases = std::move(st.bases);
  bundle.history = std::move(st.history);
  return bundle;
}

std::vector<Matrix> estimate_sources(const ModelBundle& bundle, const Matrix& V,
                                     std::optional<double> clip_max) {
  SeparationResult r = separate(V, bundle.bases, bundle.spec.sparsity, bundle.spec.test_solver);
  if (clip_max)
    for (auto& e : r.filtered) e = e.cwiseMax(0.0).cwiseMin(*clip_max);
  return std::move(r.filtered);
}

Matrix score_columns(std::span<const Matrix> estimates, std::span<const Matrix> references,
                     MetricKind metric, double peak) {
  if (estimates.size() != references.size())
    throw Error("score: " + std::to_string(estimates.size()) + " estimates for " +
                std::to_string(references.size()) + " references");
  if (estimates.empty()) throw Error("score: nothing to score");
  const Index n = estimates.front().cols();
  Matrix scores(static_cast<Index>(estimates.size()), n);
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    require_same_shape("score", "estimate", estimates[i], "reference", references[i]);
    require_cols_match("score", "estimate", estimates[i], "first estimate", estimates.front());
    for (Index c = 0; c < n; ++c) {
      scores(static_cast<Index>(i), c) =
          metric == MetricKind::psnr ? psnr(estimates[i].col(c), references[i].col(c), peak)
                                     : si_sdr(estimates[i].col(c), references[i].col(c));
    }
  }
  return scores;
}

std::vector<double> weighted_column_scores(const Matrix& scores, std::span<const double> weights) {
  const auto S = scores.rows();
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(static_cast<std::size_t>(S), 1.0 / static_cast<double>(S));
  if (static_cast<Index>(w.size()) != S) throw Error("metric weights must have one entry per source");
  std::vector<double> out;
  std::vector<double> col(static_cast<std::size_t>(S));
  for (Index c = 0; c < scores.cols(); ++c) {
    for (Index i = 0; i < S; ++i) col[static_cast<std::size_t>(i)] = cap_score(scores(i, c));
    out.push_back(weighted_score(col, w));
  }
  return out;
}

TrialObjective make_trial_objective(const ExperimentConfig& cfg, const ExperimentData& data) {
  if (data.supervised.empty() || data.supervised_mix.cols() == 0)
    throw Error("tuning needs a supervised set to validate on");
  return [&cfg, &data](const TrainSpec& spec, const Fold& fold) {
    const ModelBundle bundle = train_model(cfg, spec, data, fold.train);
    const Matrix V = kernels::gather_columns(data.supervised_mix, fold.validation);
    std::vector<Matrix> refs;
    for (const auto& s : data.supervised) refs.push_back(kernels::gather_columns(s, fold.validation));
    const auto est = estimate_sources(bundle, V, cfg.clip_max);
    const Matrix scores = score_columns(est, refs, cfg.metric, cfg.peak);
    return median(weighted_column_scores(scores, cfg.metric_weights));
  };
}

}  // namespace anmf
