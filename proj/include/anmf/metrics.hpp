#pragma once

#include "anmf/common.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace anmf {

/// Value returned by psnr/si_sdr for a perfect estimate.
inline constexpr double kPerfectScore = std::numeric_limits<double>::infinity();

/// Default cap applied to perfect scores before aggregation.
inline constexpr double kScoreCap = 100.0;

/// 10 log10(peak^2 / MSE); kPerfectScore when MSE is 0.
double psnr(const Matrix& estimate, const Matrix& reference, double peak = 1.0);

/// Scale-invariant signal-to-distortion ratio in dB. kPerfectScore when the
/// estimate is a scaled copy of the reference.
double si_sdr(const Vector& estimate, const Vector& reference);

/// min(value, cap), mapping +inf to cap.
double cap_score(double value, double cap = kScoreCap);

/// sum_i w_i score_i.
double weighted_score(std::span<const double> scores, std::span<const double> weights);

/// Median of the values (average of the middle pair for even counts).
double median(std::vector<double> values);

/// Standard deviation of the median over seeded bootstrap resamples.
double bootstrap_median_se(std::span<const double> values, int resamples = 1000,
                           std::uint64_t seed = 0);

struct Fold {
  std::vector<Index> train;
  std::vector<Index> validation;
};

/// Seeded k-fold split of 0..n-1; validation sets partition the indices and
/// differ in size by at most one.
std::vector<Fold> cv_split(Index n, int folds, std::uint64_t seed);

}  // namespace anmf
