#pragma once

#include "anmf/metrics.hpp"
#include "anmf/trainer.hpp"

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace anmf {

struct LogUniform {
  double lo = 0.0;
  double hi = 0.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 0.0;
};

struct Choice {
  std::vector<double> values;
};

using Sampler = std::variant<LogUniform, Uniform, Choice>;

/// Distributions over TrainSpec fields, keyed by field name:
///   d, tau_A, tau_S, mu_W, mu_H, epochs, batch_size, test_max_iter, omega_mix,
///   init (0 = exemplar, 1 = random).
/// Integer fields are rounded to the nearest value.
struct SearchSpace {
  std::map<std::string, Sampler> params;

  static const std::vector<std::string>& known_parameters();
  void validate() const;
  /// Draws every parameter (in key order) and writes it into a copy of base.
  TrainSpec sample(const TrainSpec& base, Rng& rng) const;
};

/// Scores a spec: train on `fold.train`, validate on `fold.validation`
/// (indices into the supervised set). Must be safe to call concurrently.
using TrialObjective = std::function<double(const TrainSpec&, const Fold&)>;

struct Trial {
  TrainSpec spec;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct TuneResult {
  std::vector<Trial> trials;
  std::size_t best = 0;  ///< first trial attaining the maximal mean score
};

struct SearchOptions {
  int trials = 15;
  int folds = 5;
  std::uint64_t seed = 0;
  Index n_supervised = 0;  ///< size of the supervised set the folds index into
};

/// Specs that train on the supervised set (tau_S > 0) get cross-validated.
bool uses_strong_supervision(const TrainSpec& spec);

/// Randomized hyperparameter search. Trial t samples from Rng(derive_seed(seed, t)),
/// so results do not depend on how trials are scheduled. Strongly supervised
/// trials are scored with the mean over cv_split folds; the others once, with
/// every supervised index in both train and validation. A throwing objective
/// scores -inf.
TuneResult random_search(const SearchSpace& space, const TrainSpec& base,
                         const TrialObjective& objective, const SearchOptions& opt);

}  // namespace anmf
