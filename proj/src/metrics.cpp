#include "anmf/metrics.hpp"

#include "anmf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace anmf {

double psnr(const Matrix& estimate, const Matrix& reference, double peak) {
  require_same_shape("psnr", "estimate", estimate, "reference", reference);
  if (!(peak > 0.0)) throw Error("psnr: peak must be positive");
  if (estimate.size() == 0) throw Error("psnr: empty input");
  const double mse = (estimate - reference).squaredNorm() / static_cast<double>(estimate.size());
  if (mse == 0.0) return kPerfectScore;
  return 10.0 * std::log10(peak * peak / mse);
}

double si_sdr(const Vector& estimate, const Vector& reference) {
  require_same_shape("si_sdr", "estimate", estimate, "reference", reference);
  const double ref_energy = reference.squaredNorm();
  if (!(ref_energy > 0.0)) throw Error("si_sdr: reference signal is zero");
  const double alpha = estimate.dot(reference) / ref_energy;
  const Vector target = alpha * reference;
  const double target_energy = target.squaredNorm();
  const double noise_energy = (target - estimate).squaredNorm();
  if (noise_energy <= 1e-24 * target_energy) return kPerfectScore;
  if (target_energy == 0.0) return -kPerfectScore;
  return 10.0 * std::log10(target_energy / noise_energy);
}

double cap_score(double value, double cap) { return std::min(value, cap); }

double weighted_score(std::span<const double> scores, std::span<const double> weights) {
  if (scores.size() != weights.size())
    throw Error("weighted_score: scores and weights differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (weights[i] == 0.0) continue;  // a zero weight ignores that source, even at +-inf
    total += weights[i] * scores[i];
  }
  return total;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median: no values");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double bootstrap_median_se(std::span<const double> values, int resamples, std::uint64_t seed) {
  if (values.empty()) throw Error("bootstrap_median_se: no values");
  if (resamples < 2) throw Error("bootstrap_median_se: need at least two resamples");
  Rng rng(seed);
  std::vector<double> medians;
  medians.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> sample(values.size());
  for (int r = 0; r < resamples; ++r) {
    for (auto& x : sample) x = values[rng.uniform_index(values.size())];
    medians.push_back(median(sample));
  }
  double mean = 0.0;
  for (double m : medians) mean += m;
  mean /= resamples;
  double var = 0.0;
  for (double m : medians) var += (m - mean) * (m - mean);
  return std::sqrt(var / (resamples - 1));
}

std::vector<Fold> cv_split(Index n, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw Error("cv_split: folds must lie in [2, n]");
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  std::vector<Fold> out(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    const Index begin = n * k / folds;
    const Index end = n * (k + 1) / folds;
    auto& fold = out[static_cast<std::size_t>(k)];
    for (Index t = 0; t < n; ++t) {
      const Index idx = perm[static_cast<std::size_t>(t)];
      (t >= begin && t < end ? fold.validation : fold.train).push_back(idx);
    }
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.train.begin(), fold.train.end());
  }
  return out;
}

}  // namespace anmf
