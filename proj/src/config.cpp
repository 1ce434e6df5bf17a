#include "anmf/config.hpp"

#include <algorithm>
#include <fstream>

namespace anmf {

namespace {

namespace fs = std::filesystem;

InitMode parse_init(const std::string& s) {
  if (s == "exemplar") return InitMode::exemplar;
  if (s == "random") return InitMode::random;
  throw Error("unknown init mode '" + s + "'");
}

SampleAnchor parse_anchor(const std::string& s) {
  if (s == "true_data") return SampleAnchor::true_data;
  if (s == "adversarial") return SampleAnchor::adversarial;
  if (s == "supervised") return SampleAnchor::supervised;
  throw Error("unknown sample anchor '" + s + "'");
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw Error("expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols) throw Error("ragged matrix rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

fs::path resolve(const fs::path& base, const Json& j) {
  fs::path p = j.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::vector<fs::path> resolve_list(const fs::path& base, const Json& j) {
  std::vector<fs::path> out;
  for (const auto& e : j) out.push_back(resolve(base, e));
  return out;
}

}  // namespace

const char* to_string(MetricKind m) { return m == MetricKind::psnr ? "psnr" : "sisdr"; }

MetricKind parse_metric(const std::string& name) {
  if (name == "psnr") return MetricKind::psnr;
  if (name == "sisdr" || name == "si_sdr") return MetricKind::sisdr;
  throw Error("unknown metric '" + name + "'");
}

Json weight_model_to_json(const WeightModel& wm) {
  if (wm.mode == WeightModel::Mode::deterministic)
    return {{"mode", "deterministic"}, {"values", wm.values}};
  return {{"mode", "dirichlet"}, {"concentration", wm.concentration}, {"mc_samples", wm.mc_samples}};
}

WeightModel weight_model_from_json(const Json& j) {
  const std::string mode = j.value("mode", "deterministic");
  WeightModel wm;
  if (mode == "deterministic") {
    wm.values = j.at("values").get<std::vector<double>>();
  } else if (mode == "dirichlet") {
    wm.mode = WeightModel::Mode::dirichlet;
    wm.concentration = j.at("concentration").get<std::vector<double>>();
    wm.mc_samples = j.value("mc_samples", wm.mc_samples);
  } else {
    throw Error("unknown weight model mode '" + mode + "'");
  }
  wm.validate();
  return wm;
}

Json spec_to_json(const TrainSpec& spec) {
  Json j{{"d", spec.d},
         {"tau_A", spec.tau_A},
         {"tau_S", spec.tau_S},
         {"gamma", spec.gamma},
         {"mu_W", spec.sparsity.mu_W},
         {"mu_H", spec.sparsity.mu_H},
         {"eps", spec.sparsity.eps},
         {"epochs", spec.epochs},
         {"batch_size", spec.batch_size},
         {"seed", spec.seed},
         {"init", to_string(spec.init)},
         {"sample_anchor", to_string(spec.sample_anchor)},
         {"test_max_iter", spec.test_solver.max_iter},
         {"test_tol", spec.test_solver.tol}};
  if (spec.omega) j["omega"] = matrix_to_json(*spec.omega);
  if (spec.omega_mix) j["omega_mix"] = *spec.omega_mix;
  if (spec.weight_model) j["weight_model"] = weight_model_to_json(*spec.weight_model);
  return j;
}

TrainSpec spec_from_json(const Json& j, TrainSpec spec) {
  if (!j.is_object()) throw Error("train block must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "d") {
      spec.d = value.is_array() ? value.get<std::vector<Index>>() : std::vector<Index>{value.get<Index>()};
    } else if (key == "tau_A") {
      spec.tau_A = value.get<double>();
    } else if (key == "tau_S") {
      spec.tau_S = value.get<double>();
    } else if (key == "gamma") {
      spec.gamma = value.is_array() ? value.get<std::vector<double>>() : std::vector<double>{value.get<double>()};
    } else if (key == "mu_W") {
      spec.sparsity.mu_W = value.get<double>();
    } else if (key == "mu_H") {
      spec.sparsity.mu_H = value.get<double>();
    } else if (key == "eps") {
      spec.sparsity.eps = value.get<double>();
    } else if (key == "epochs") {
      spec.epochs = value.get<int>();
    } else if (key == "batch_size") {
      spec.batch_size = value.get<Index>();
    } else if (key == "seed") {
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "init") {
      spec.init = parse_init(value.get<std::string>());
    } else if (key == "sample_anchor") {
      spec.sample_anchor = parse_anchor(value.get<std::string>());
    } else if (key == "test_max_iter") {
      spec.test_solver.max_iter = value.get<int>();
    } else if (key == "test_tol") {
      spec.test_solver.tol = value.get<double>();
    } else if (key == "omega") {
      if (value.is_string() && value.get<std::string>() == "default") spec.omega.reset();
      else spec.omega = matrix_from_json(value);
    } else if (key == "omega_mix") {
      spec.omega_mix = value.get<double>();
    } else if (key == "weight_model") {
      spec.weight_model = weight_model_from_json(value);
    } else {
      throw Error("unknown train field '" + key + "'");
    }
  }
  return spec;
}

SearchSpace search_space_from_json(const Json& j) {
  SearchSpace space;
  for (const auto& [name, dist] : j.items()) {
    if (dist.contains("log_uniform")) {
      const auto b = dist.at("log_uniform").get<std::vector<double>>();
      if (b.size() != 2) throw Error("log_uniform needs [lo, hi] for " + name);
      space.params[name] = LogUniform{b[0], b[1]};
    } else if (dist.contains("uniform")) {
      const auto b = dist.at("uniform").get<std::vector<double>>();
      if (b.size() != 2) throw Error("uniform needs [lo, hi] for " + name);
      space.params[name] = Uniform{b[0], b[1]};
    } else if (dist.contains("choice")) {
      Choice c;
      for (const auto& v : dist.at("choice")) {
        if (v.is_string()) c.values.push_back(parse_init(v.get<std::string>()) == InitMode::exemplar ? 0.0 : 1.0);
        else c.values.push_back(v.get<double>());
      }
      space.params[name] = c;
    } else {
      throw Error("search space entry '" + name + "' needs log_uniform, uniform or choice");
    }
  }
  space.validate();
  return space;
}

void ExperimentConfig::validate() const {
  const double tA = train.tau_A;
  const double tS = train.tau_S;
  if (method == "nmf" || method == "semi") {
    if (tA != 0.0 || tS != 0.0) throw Error(method + " requires tau_A = 0 and tau_S = 0");
  } else if (method == "enmf") {
    if (tA != 0.0 || tS != 0.0) throw Error("enmf requires tau_A = 0 and tau_S = 0");
    if (train.epochs != 0) throw Error("enmf samples its basis and trains for 0 epochs");
    if (train.init != InitMode::exemplar) throw Error("enmf requires exemplar initialization");
  } else if (method == "anmf") {
    if (!(tA > 0.0) || tS != 0.0) throw Error("anmf requires tau_A > 0 and tau_S = 0");
  } else if (method == "dnmf") {
    if (tS != 1.0) throw Error("dnmf requires tau_S = 1");
  } else if (method != "danmf") {
    throw Error("unknown method '" + method + "'");
  }

  if (method == "semi") {
    if (!mixes) throw Error("semi needs the mixes to fit");
    if (pretrained.empty()) throw Error("semi needs the pretrained bases of the other sources");
    train.validate(static_cast<int>(pretrained.size()) + 1);
  } else {
    const int S = static_cast<int>(sources.empty() ? supervised.size() : sources.size());
    train.validate(S);
    if (tS < 1.0 && sources.empty()) throw Error("weak supervision term needs 'sources'");
    if (tS > 0.0 && (supervised.empty() || !supervised_mix))
      throw Error("strong supervision term needs 'supervised' components and mixes");
    if (!supervised.empty() && !sources.empty() && supervised.size() != sources.size())
      throw Error("'supervised' must list one component file per source");
  }
  if (!metric_weights.empty()) {
    for (double w : metric_weights)
      if (!(w >= 0.0)) throw Error("metric weights must be non-negative");
  }
  if (!(peak > 0.0)) throw Error("peak must be positive");
  if (tuning) {
    if (tuning->trials < 1) throw Error("tuning needs at least one trial");
    if (tuning->folds < 2) throw Error("tuning needs at least two folds");
  }
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.method = j.value("method", "nmf");

  // Method-implied defaults, overridden by explicit train fields.
  TrainSpec base;
  if (cfg.method == "anmf") base.tau_A = 0.1;
  if (cfg.method == "dnmf") base.tau_S = 1.0;
  if (cfg.method == "danmf") {
    base.tau_A = 0.1;
    base.tau_S = 0.5;
  }
  if (cfg.method == "enmf") base.epochs = 0;
  cfg.train = spec_from_json(j.value("train", Json::object()), base);

  if (j.contains("sources")) cfg.sources = resolve_list(base_dir, j.at("sources"));
  if (j.contains("mixes")) cfg.mixes = resolve(base_dir, j.at("mixes"));
  if (j.contains("supervised")) {
    const Json& sup = j.at("supervised");
    cfg.supervised = resolve_list(base_dir, sup.at("components"));
    cfg.supervised_mix = resolve(base_dir, sup.at("mixes"));
  }
  if (j.contains("pretrained")) cfg.pretrained = resolve_list(base_dir, j.at("pretrained"));
  if (j.contains("metric")) cfg.metric = parse_metric(j.at("metric").get<std::string>());
  if (j.contains("metric_weights")) cfg.metric_weights = j.at("metric_weights").get<std::vector<double>>();
  cfg.peak = j.value("peak", cfg.peak);
  if (j.contains("clip_max")) cfg.clip_max = j.at("clip_max").get<double>();
  if (j.contains("tuning")) {
    const Json& t = j.at("tuning");
    TuningBlock tb;
    tb.trials = t.value("trials", tb.trials);
    tb.folds = t.value("folds", tb.folds);
    tb.space = search_space_from_json(t.value("space", Json::object()));
    cfg.tuning = tb;
  }

  static const std::vector<std::string> known{"method", "sources",        "mixes", "supervised",
                                              "pretrained", "train",      "metric", "metric_weights",
                                              "peak",   "clip_max",       "tuning"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error("unknown config key '" + key + "'");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace anmf
