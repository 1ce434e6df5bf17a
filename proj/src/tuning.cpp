#include "anmf/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace anmf {

namespace {

double draw(const Sampler& s, Rng& rng) {
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LogUniform>) {
          const double u = rng.uniform01();
          return std::exp(std::log(x.lo) + u * (std::log(x.hi) - std::log(x.lo)));
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return x.lo + rng.uniform01() * (x.hi - x.lo);
        } else {
          return x.values[rng.uniform_index(x.values.size())];
        }
      },
      s);
}

Index round_at_least(double v, Index lo) {
  return std::max<Index>(lo, static_cast<Index>(std::llround(v)));
}

void apply(TrainSpec& spec, const std::string& name, double v) {
  if (name == "d") spec.d.assign(spec.d.size(), round_at_least(v, 1));
  else if (name == "tau_A") spec.tau_A = v;
  else if (name == "tau_S") spec.tau_S = std::clamp(v, 0.0, 1.0);
  else if (name == "mu_W") spec.sparsity.mu_W = v;
  else if (name == "mu_H") spec.sparsity.mu_H = v;
  else if (name == "epochs") spec.epochs = static_cast<int>(round_at_least(v, 0));
  else if (name == "batch_size") spec.batch_size = round_at_least(v, 1);
  else if (name == "test_max_iter") spec.test_solver.max_iter = static_cast<int>(round_at_least(v, 1));
  else if (name == "omega_mix") spec.omega_mix = std::clamp(v, 0.0, 1.0);
  else if (name == "init") spec.init = std::llround(v) == 0 ? InitMode::exemplar : InitMode::random;
  else throw Error("SearchSpace: unknown parameter '" + name + "'");
}

constexpr double kFailed = -std::numeric_limits<double>::infinity();

}  // namespace

const std::vector<std::string>& SearchSpace::known_parameters() {
  static const std::vector<std::string> names{"d",          "tau_A",         "tau_S",
                                              "mu_W",       "mu_H",          "epochs",
                                              "batch_size", "test_max_iter", "omega_mix",
                                              "init"};
  return names;
}

void SearchSpace::validate() const {
  const auto& known = known_parameters();
  for (const auto& [name, sampler] : params) {
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw Error("SearchSpace: unknown parameter '" + name + "'");
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Choice>) {
            if (x.values.empty()) throw Error("SearchSpace: empty choice list for " + name);
          } else {
            if (!(x.lo < x.hi)) throw Error("SearchSpace: need lo < hi for " + name);
            if constexpr (std::is_same_v<T, LogUniform>)
              if (!(x.lo > 0.0)) throw Error("SearchSpace: log-uniform bounds must be positive for " + name);
          }
        },
        sampler);
  }
}

TrainSpec SearchSpace::sample(const TrainSpec& base, Rng& rng) const {
  TrainSpec spec = base;
  for (const auto& [name, sampler] : params) apply(spec, name, draw(sampler, rng));
  return spec;
}

bool uses_strong_supervision(const TrainSpec& spec) { return spec.tau_S > 0.0; }

TuneResult random_search(const SearchSpace& space, const TrainSpec& base,
                         const TrialObjective& objective, const SearchOptions& opt) {
  if (opt.trials < 1) throw Error("random_search: need at least one trial");
  space.validate();

  TuneResult result;
  result.trials.resize(static_cast<std::size_t>(opt.trials));
  for (int t = 0; t < opt.trials; ++t) {
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(t)));
    result.trials[static_cast<std::size_t>(t)].spec = space.sample(base, rng);
  }

  Fold everything;
  everything.train.resize(static_cast<std::size_t>(opt.n_supervised));
  std::iota(everything.train.begin(), everything.train.end(), Index{0});
  everything.validation = everything.train;

  std::vector<Fold> folds;
  bool folds_ok = true;
  try {
    folds = cv_split(opt.n_supervised, opt.folds, derive_seed(opt.seed, 0xF01D));
  } catch (const Error&) {
    folds_ok = false;
  }

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < opt.trials; ++t) {
    Trial& trial = result.trials[static_cast<std::size_t>(t)];
    try {
      if (uses_strong_supervision(trial.spec)) {
        if (!folds_ok) throw Error("random_search: supervised set too small for the fold count");
        for (const auto& f : folds) trial.fold_scores.push_back(objective(trial.spec, f));
      } else {
        trial.fold_scores.push_back(objective(trial.spec, everything));
      }
      double sum = 0.0;
      for (double s : trial.fold_scores) sum += s;
      trial.mean_score = sum / static_cast<double>(trial.fold_scores.size());
      if (std::isnan(trial.mean_score)) trial.mean_score = kFailed;
    } catch (...) {
      trial.mean_score = kFailed;
    }
  }

  for (std::size_t t = 1; t < result.trials.size(); ++t)
    if (result.trials[t].mean_score > result.trials[result.best].mean_score) result.best = t;
  return result;
}

}  // namespace anmf
