#pragma once

#include "anmf/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace anmf {

class Rng;

/// Distribution of the mixing weights a (one per source).
struct WeightModel {
  enum class Mode { deterministic, dirichlet };

  Mode mode = Mode::deterministic;
  std::vector<double> values;         ///< deterministic: point on the simplex
  std::vector<double> concentration;  ///< dirichlet: positive concentrations
  int mc_samples = 100000;            ///< dirichlet: Monte-Carlo draws for beta

  /// Deterministic equal weights 1/S.
  static WeightModel equal(int sources);
  static WeightModel dirichlet(std::vector<double> concentration, int mc_samples = 100000);

  int sources() const;
  void validate() const;

  /// One weight vector: the fixed values, or a Dirichlet draw from rng.
  std::vector<double> draw(Rng& rng) const;
};

/// Mixture weights of the adversarial distribution. omega(i, j), j != i, is the
/// weight of source j's data in source i's adversarial set; residual(i) is the
/// weight left for naively inverted mixes. The diagonal is unused.
struct OmegaWeights {
  Matrix omega;
  Vector residual;

  /// Builds residual(i) = 1 - sum_{j != i} omega(i, j) and validates.
  static OmegaWeights from_matrix(Matrix omega);
  void validate() const;
  int sources() const { return static_cast<int>(omega.rows()); }
};

/// a_i / sum_j a_j^2, the gain of the pseudo-inverse of the mixing operator.
double naive_gain(std::span<const double> a, int i);

/// Applies the pseudo-inverse of v -> sum_i a_i u_i; component i is
/// (a_i / sum_j a_j^2) v.
std::vector<Vector> naive_invert(const Vector& v, std::span<const double> a);

struct BetaEstimate {
  double mean = 0.0;
  double std_error = 0.0;  ///< 0 for deterministic weights
};

/// beta_i = E[(a_i / sum_j a_j^2)^2]. Exact for deterministic weights, a seeded
/// Monte-Carlo mean over mc_samples Dirichlet draws otherwise.
double compute_beta(const WeightModel& wm, int i, std::uint64_t seed);
BetaEstimate estimate_beta(const WeightModel& wm, int i, std::uint64_t seed);

/// omega_ij = N_j / Nhat_i with Nhat_i = N_V + sum_{k != i} N_k.
OmegaWeights default_omega(std::span<const Index> counts, Index n_mix);

/// Default ratios rescaled so that each residual equals mix_weight.
OmegaWeights omega_with_mix_weight(std::span<const Index> counts, Index n_mix, double mix_weight);

inline constexpr int kMixOrigin = -1;

struct AdversarialSegment {
  int origin = kMixOrigin;  ///< source index, or kMixOrigin for the mixes
  Index begin = 0;
  Index end = 0;
  double alpha = 1.0;
};

/// Scaled, column-concatenated adversarial data of one source.
struct AdversarialSet {
  Matrix matrix;
  std::vector<AdversarialSegment> segments;

  Index cols() const { return matrix.cols(); }
};

/// Concatenates alpha_j U_j (j != i) and alpha_V V with
///   alpha_j = sqrt(omega_ij Nhat_i / N_j),
///   alpha_V = sqrt(residual_i Nhat_i beta_i / N_V).
/// Empty blocks are dropped. Scalings within rounding of one are taken as
/// exactly one, so default weights give a plain copy.
AdversarialSet assemble_adversarial(int i, std::span<const Matrix> sources, const Matrix& mixes,
                                    const OmegaWeights& om, double beta_i);

}  // namespace anmf
