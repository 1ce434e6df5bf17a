#include "anmf/cli.hpp"

#include "anmf/experiment.hpp"
#include "anmf/kernels.hpp"
#include "anmf/metrics.hpp"
#include "anmf/mixing.hpp"
#include "anmf/signal.hpp"
#include "anmf/tuning.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

namespace anmf {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> config;
  bool clamp_negatives = false;

  NegativePolicy policy() const {
    return clamp_negatives ? NegativePolicy::clamp : NegativePolicy::reject;
  }
};

struct MetricFlags {
  std::optional<std::string> metric;
  std::optional<double> peak;
  std::optional<double> clip_max;
  std::vector<double> weights;
};

void apply_threads(const Globals& g) {
  if (g.threads) {
    if (*g.threads < 1) throw Error("--threads must be at least 1");
    kernels::set_threads(*g.threads);
    return;
  }
  if (const char* env = std::getenv("ANMF_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) kernels::set_threads(n);
      else throw Error("ANMF_THREADS must be at least 1");
    } catch (const std::logic_error&) {
      throw Error(std::string("ANMF_THREADS is not a number: ") + env);
    }
  }
}

ExperimentConfig require_config(const Globals& g, const char* command) {
  if (!g.config) throw Error(std::string(command) + " needs --config");
  ExperimentConfig cfg = load_config(*g.config);
  if (g.seed) cfg.train.seed = *g.seed;
  return cfg;
}

/// Metric settings: flags override the config, which overrides defaults.
struct MetricSettings {
  MetricKind metric = MetricKind::psnr;
  double peak = 1.0;
  std::optional<double> clip_max;
  std::vector<double> weights;
};

MetricSettings metric_settings(const Globals& g, const MetricFlags& f) {
  MetricSettings s;
  if (g.config) {
    const ExperimentConfig cfg = load_config(*g.config);
    s.metric = cfg.metric;
    s.peak = cfg.peak;
    s.clip_max = cfg.clip_max;
    s.weights = cfg.metric_weights;
  }
  if (f.metric) s.metric = parse_metric(*f.metric);
  if (f.peak) s.peak = *f.peak;
  if (f.clip_max) s.clip_max = *f.clip_max;
  if (!f.weights.empty()) s.weights = f.weights;
  return s;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// sample_index,source,metric,value rows of capped scores, then the median
/// and its bootstrap standard error per source.
std::string metrics_csv(const Matrix& scores, MetricKind metric, std::uint64_t seed) {
  std::ostringstream os;
  os << "sample_index,source,metric,value\n";
  const char* name = to_string(metric);
  for (Index c = 0; c < scores.cols(); ++c)
    for (Index i = 0; i < scores.rows(); ++i)
      os << c << ',' << i << ',' << name << ',' << num(cap_score(scores(i, c))) << '\n';
  for (Index i = 0; i < scores.rows(); ++i) {
    std::vector<double> v;
    for (Index c = 0; c < scores.cols(); ++c) v.push_back(cap_score(scores(i, c)));
    os << "median," << i << ',' << name << ',' << num(median(v)) << '\n';
    os << "median_se," << i << ',' << name << ',' << num(bootstrap_median_se(v, 1000, seed)) << '\n';
  }
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

bool is_wav(const fs::path& p) { return p.extension() == ".wav"; }

/// Loads a signal file for evaluation: WAV as a single column, else a matrix file.
Matrix load_signal(const fs::path& p) {
  if (!is_wav(p)) return load_matrix(p);
  const Audio a = load_wav(p);
  return Eigen::Map<const Vector>(a.samples.data(), static_cast<Index>(a.samples.size()));
}

void cmd_train(const Globals& g, const fs::path& out_dir, std::ostream& out) {
  const ExperimentConfig cfg = require_config(g, "train");
  const ExperimentData data = load_experiment_data(cfg, g.policy());
  const ModelBundle bundle = train_model(cfg, cfg.train, data);
  save_bundle(out_dir, bundle);
  Json j{{"command", "train"},
         {"bundle", out_dir.string()},
         {"method", bundle.method},
         {"sources", bundle.sources()},
         {"epochs", bundle.spec.epochs},
         {"final_objective", bundle.history.empty() ? Json(nullptr) : finite_or_null(bundle.history.back())}};
  out << j.dump(2) << '\n';
}

void cmd_separate(const Globals& g, const fs::path& model, const fs::path& mix,
                  const fs::path& out_dir, const std::vector<fs::path>& references,
                  const MetricFlags& f, std::ostream& out) {
  const MetricSettings ms = metric_settings(g, f);
  const ModelBundle bundle = load_bundle(model);
  const Matrix V = load_data(mix, g.policy());
  if (V.rows() != bundle.rows())
    throw_dimension("separate", "mix", V.rows(), V.cols(), "model", bundle.rows(), 0);
  const auto est = estimate_sources(bundle, V, ms.clip_max);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < est.size(); ++i)
    save_matrix(out_dir / ("source_" + std::to_string(i) + ".anmf"), est[i]);
  if (references.empty()) {
    Json j{{"command", "separate"}, {"sources", est.size()}, {"columns", V.cols()}, {"out", out_dir.string()}};
    out << j.dump(2) << '\n';
    return;
  }
  if (references.size() != est.size())
    throw Error("separate: need one reference per source (" + std::to_string(est.size()) + ")");
  std::vector<Matrix> refs;
  for (const auto& r : references) refs.push_back(load_matrix(r));
  const Matrix scores = score_columns(est, refs, ms.metric, ms.peak);
  const std::string csv = metrics_csv(scores, ms.metric, g.seed.value_or(0));
  write_text(out_dir / "metrics.csv", csv);
  out << csv;
}

struct DenoiseFlags {
  fs::path model;
  fs::path input;
  fs::path output;
  std::optional<fs::path> reference;
  int source = 0;
  std::string mode = "projection";
  Index n_fft = 512;
  Index hop = 128;
};

void cmd_denoise(const DenoiseFlags& f, std::ostream& out) {
  const ModelBundle bundle = load_bundle(f.model);
  if (f.source < 0 || f.source >= bundle.sources()) throw Error("denoise: --source out of range");
  const Audio in = load_wav(f.input);
  StftConfig sc;
  sc.n_fft = f.n_fft;
  sc.hop = f.hop;
  sc.sample_rate = in.sample_rate;
  const Spectrogram X = stft(in.samples, sc);
  if (X.bins() != bundle.rows())
    throw_dimension("denoise", "spectrogram", X.bins(), X.frames(), "model", bundle.rows(), 0);

  Audio result;
  result.sample_rate = in.sample_rate;
  if (f.mode == "projection") {
    Spectrogram est = X;
    est.magnitude = project_denoise(X.magnitude, bundle.bases[static_cast<std::size_t>(f.source)],
                                    bundle.spec.sparsity, bundle.spec.test_solver);
    result.samples = istft(est);
  } else if (f.mode == "wiener") {
    const SeparationResult r =
        separate(X.magnitude, bundle.bases, bundle.spec.sparsity, bundle.spec.test_solver);
    result.samples = apply_mask(X, r.raw)[static_cast<std::size_t>(f.source)];
  } else {
    throw Error("denoise: --mode must be projection or wiener");
  }
  save_wav(f.output, result);

  if (f.reference) {
    const Audio ref = load_wav(*f.reference);
    if (ref.samples.size() != in.samples.size()) throw Error("denoise: reference length differs from input");
    const auto vec = [](const std::vector<double>& s) {
      return Vector(Eigen::Map<const Vector>(s.data(), static_cast<Index>(s.size())));
    };
    // Score the written (quantized) output so that the numbers match the file.
    const Audio written = load_wav(f.output);
    out << "sample_index,source,metric,value\n";
    out << "input," << f.source << ",sisdr," << num(cap_score(si_sdr(vec(in.samples), vec(ref.samples)))) << '\n';
    out << "output," << f.source << ",sisdr," << num(cap_score(si_sdr(vec(written.samples), vec(ref.samples))))
        << '\n';
  } else {
    Json j{{"command", "denoise"}, {"output", f.output.string()}, {"samples", result.samples.size()}};
    out << j.dump(2) << '\n';
  }
}

void cmd_tune(const Globals& g, const fs::path& out_dir, std::ostream& out) {
  const ExperimentConfig cfg = require_config(g, "tune");
  if (!cfg.tuning) throw Error("tune: config has no tuning block");
  const ExperimentData data = load_experiment_data(cfg, g.policy());
  SearchOptions opt;
  opt.trials = cfg.tuning->trials;
  opt.folds = cfg.tuning->folds;
  opt.seed = cfg.train.seed;
  opt.n_supervised = data.supervised_mix.cols();
  const TuneResult r = random_search(cfg.tuning->space, cfg.train, make_trial_objective(cfg, data), opt);

  Json trials = Json::array();
  for (const auto& t : r.trials) {
    Json scores = Json::array();
    for (double s : t.fold_scores) scores.push_back(finite_or_null(s));
    trials.push_back({{"spec", spec_to_json(t.spec)}, {"fold_scores", scores}, {"mean_score", finite_or_null(t.mean_score)}});
  }
  const Trial& best = r.trials[r.best];
  Json j{{"command", "tune"},
         {"method", cfg.method},
         {"metric", to_string(cfg.metric)},
         {"trials", trials},
         {"best", r.best},
         {"best_score", finite_or_null(best.mean_score)},
         {"best_spec", spec_to_json(best.spec)}};
  fs::create_directories(out_dir);
  write_text(out_dir / "tune.json", j.dump(2) + "\n");
  if (std::isfinite(best.mean_score)) save_bundle(out_dir / "best", train_model(cfg, best.spec, data));
  out << j.dump(2) << '\n';
}

void cmd_eval(const Globals& g, const std::vector<fs::path>& estimates,
              const std::vector<fs::path>& references, const MetricFlags& f, std::ostream& out) {
  const MetricSettings ms = metric_settings(g, f);
  std::vector<Matrix> est;
  std::vector<Matrix> refs;
  for (const auto& p : estimates) est.push_back(load_signal(p));
  for (const auto& p : references) refs.push_back(load_signal(p));
  if (ms.clip_max)
    for (auto& e : est) e = e.cwiseMax(0.0).cwiseMin(*ms.clip_max);
  out << metrics_csv(score_columns(est, refs, ms.metric, ms.peak), ms.metric, g.seed.value_or(0));
}

struct MixFlags {
  std::vector<fs::path> sources;
  fs::path out_dir;
  std::vector<double> weights;
  std::vector<double> dirichlet;
  int mc_samples = 100000;
  std::optional<double> snr_db;
};

void cmd_mix(const Globals& g, const MixFlags& f, std::ostream& out) {
  if (f.sources.size() < 2) throw Error("mix: need at least two sources");
  fs::create_directories(f.out_dir);
  const std::uint64_t seed = g.seed.value_or(0);

  if (is_wav(f.sources.front())) {
    if (!f.snr_db || f.sources.size() != 2) throw Error("mix: WAV inputs need two files and --snr-db");
    Audio signal = load_wav(f.sources[0]);
    Audio noise = load_wav(f.sources[1]);
    if (signal.sample_rate != noise.sample_rate) throw Error("mix: sample rates differ");
    const std::size_t n = std::min(signal.samples.size(), noise.samples.size());
    signal.samples.resize(n);
    noise.samples.resize(n);
    Audio mixed{mix_at_snr(signal.samples, noise.samples, *f.snr_db, &noise.samples), signal.sample_rate};
    save_wav(f.out_dir / "mix.wav", mixed);
    save_wav(f.out_dir / "source_0.wav", signal);
    save_wav(f.out_dir / "source_1.wav", noise);
    Json j{{"command", "mix"}, {"samples", n}, {"snr_db", *f.snr_db}, {"out", f.out_dir.string()}};
    out << j.dump(2) << '\n';
    return;
  }

  std::vector<Matrix> sources;
  for (const auto& p : f.sources) sources.push_back(load_data(p, g.policy()));
  WeightModel wm = WeightModel::equal(static_cast<int>(sources.size()));
  if (!f.weights.empty() && !f.dirichlet.empty()) throw Error("mix: give --weights or --dirichlet, not both");
  if (!f.weights.empty()) wm.values = f.weights;
  if (!f.dirichlet.empty()) wm = WeightModel::dirichlet(f.dirichlet, f.mc_samples);
  const Mixture m = mix_synthetic(sources, wm, f.snr_db, seed);
  save_matrix(f.out_dir / "mix.anmf", m.mix.entries);
  for (std::size_t i = 0; i < m.ground_truth.size(); ++i)
    save_matrix(f.out_dir / ("truth_" + std::to_string(i) + ".anmf"), m.ground_truth[i]);
  save_matrix(f.out_dir / "weights.anmf", m.weights);
  Json j{{"command", "mix"}, {"sources", sources.size()}, {"columns", m.mix.entries.cols()}, {"out", f.out_dir.string()}};
  out << j.dump(2) << '\n';
}

struct FeatureFlags {
  fs::path input;
  fs::path output;
  std::optional<fs::path> phase;
  bool inverse = false;
  Index n_fft = 512;
  Index hop = 128;
  std::optional<Index> length;
  int sample_rate = 16000;
};

void cmd_features(const FeatureFlags& f, std::ostream& out) {
  StftConfig sc;
  sc.n_fft = f.n_fft;
  sc.hop = f.hop;
  sc.sample_rate = f.sample_rate;
  if (!f.inverse) {
    const Audio a = load_wav(f.input);
    sc.sample_rate = a.sample_rate;
    const Spectrogram s = stft(a.samples, sc);
    save_matrix(f.output, s.magnitude);
    if (f.phase) save_matrix(*f.phase, s.phase);
    Json j{{"command", "features"}, {"bins", s.bins()}, {"frames", s.frames()}, {"length", s.length},
           {"sample_rate", a.sample_rate}};
    out << j.dump(2) << '\n';
    return;
  }
  if (!f.phase) throw Error("features --inverse needs --phase");
  Spectrogram s;
  s.config = sc;
  s.magnitude = load_matrix(f.input);
  s.phase = load_matrix(*f.phase);
  require_same_shape("features", "magnitude", s.magnitude, "phase", s.phase);
  s.length = f.length.value_or(std::max<Index>(0, s.frames() - 1) * sc.hop);
  save_wav(f.output, Audio{istft(s), sc.sample_rate});
  Json j{{"command", "features"}, {"samples", s.length}, {"output", f.output.string()}};
  out << j.dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial generative NMF source separation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads (default: ANMF_THREADS or all cores)");
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_flag("--clamp-negatives", g.clamp_negatives, "clamp negative input entries to 0 instead of failing");

  auto add_metric_flags = [](CLI::App* sub, MetricFlags& f) {
    sub->add_option("--metric", f.metric, "psnr or sisdr");
    sub->add_option("--peak", f.peak, "PSNR peak value");
    sub->add_option("--clip-max", f.clip_max, "clamp estimates to [0, value]");
    sub->add_option("--weights", f.weights, "per-source metric weights");
  };

  fs::path out_dir;
  auto* train = app.add_subcommand("train", "train bases from a config");
  train->add_option("--out", out_dir, "model bundle directory")->required();

  fs::path model;
  fs::path mix;
  std::vector<fs::path> references;
  MetricFlags sep_metric;
  auto* sep = app.add_subcommand("separate", "separate mixes with a trained model");
  sep->add_option("--model", model, "model bundle directory")->required();
  sep->add_option("--mix", mix, "mixes (matrix or IDX file)")->required();
  sep->add_option("--out", out_dir, "output directory")->required();
  sep->add_option("--references", references, "ground-truth sources, one file per source");
  add_metric_flags(sep, sep_metric);

  DenoiseFlags dn;
  auto* den = app.add_subcommand("denoise", "denoise a WAV file with a trained model");
  den->add_option("--model", dn.model, "model bundle directory")->required();
  den->add_option("--input", dn.input, "noisy WAV")->required();
  den->add_option("--output", dn.output, "denoised WAV")->required();
  den->add_option("--reference", dn.reference, "clean WAV; prints SI-SDR of input and output");
  den->add_option("--source", dn.source, "index of the source to keep");
  den->add_option("--mode", dn.mode, "projection or wiener");
  den->add_option("--n-fft", dn.n_fft, "FFT size");
  den->add_option("--hop", dn.hop, "hop size");

  auto* tune = app.add_subcommand("tune", "random hyperparameter search from a config");
  tune->add_option("--out", out_dir, "output directory")->required();

  std::vector<fs::path> estimates;
  MetricFlags eval_metric;
  auto* ev = app.add_subcommand("eval", "score estimates against references");
  ev->add_option("--estimates", estimates, "estimate files, one per source")->required();
  ev->add_option("--references", references, "reference files, one per source")->required();
  add_metric_flags(ev, eval_metric);

  MixFlags mf;
  auto* mx = app.add_subcommand("mix", "generate synthetic mixes");
  mx->add_option("--sources", mf.sources, "source files (matrix, IDX or WAV)")->required();
  mx->add_option("--out", mf.out_dir, "output directory")->required();
  auto* w_opt = mx->add_option("--weights", mf.weights, "fixed mixing weights");
  mx->add_option("--dirichlet", mf.dirichlet, "Dirichlet concentrations")->excludes(w_opt);
  mx->add_option("--mc-samples", mf.mc_samples, "Monte-Carlo draws for Dirichlet weights");
  mx->add_option("--snr-db", mf.snr_db, "mix signal and noise at this SNR");

  FeatureFlags ff;
  auto* feat = app.add_subcommand("features", "WAV to spectrogram matrix files and back");
  feat->add_option("--input", ff.input, "WAV (forward) or magnitude matrix (inverse)")->required();
  feat->add_option("--output", ff.output, "magnitude matrix (forward) or WAV (inverse)")->required();
  feat->add_option("--phase", ff.phase, "phase matrix file");
  feat->add_flag("--inverse", ff.inverse, "resynthesize a WAV");
  feat->add_option("--n-fft", ff.n_fft, "FFT size");
  feat->add_option("--hop", ff.hop, "hop size");
  feat->add_option("--length", ff.length, "output samples (inverse)");
  feat->add_option("--sample-rate", ff.sample_rate, "output sample rate (inverse)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    apply_threads(g);
    if (train->parsed()) cmd_train(g, out_dir, out);
    else if (sep->parsed()) cmd_separate(g, model, mix, out_dir, references, sep_metric, out);
    else if (den->parsed()) cmd_denoise(dn, out);
    else if (tune->parsed()) cmd_tune(g, out_dir, out);
    else if (ev->parsed()) cmd_eval(g, estimates, references, eval_metric, out);
    else if (mx->parsed()) cmd_mix(g, mf, out);
    else if (feat->parsed()) cmd_features(ff, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace anmf
