#pragma once

#include "anmf/adversarial.hpp"
#include "anmf/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace anmf {

struct Mixture {
  DataMatrix mix;
  std::vector<Matrix> ground_truth;  ///< weighted components a_i u_i, summing to the mix
  Matrix weights;                    ///< S x N, the weights applied to each column
};

/// Pairs the columns of the sources by index and mixes them.
///
/// Weight mode: v = sum_i a_i u_i with a drawn from wm for each column
/// (Rng(seed), columns in order). SNR mode (two sources, signal then noise):
/// each noise column is rescaled so that 10 log10(|signal|^2 / |noise|^2) =
/// snr_db and added to the unscaled signal.
Mixture mix_synthetic(std::span<const Matrix> sources, const WeightModel& wm,
                      std::optional<double> snr_db, std::uint64_t seed);

/// Gain g such that 10 log10(|signal|^2 / |g noise|^2) = snr_db.
double snr_gain(std::span<const double> signal, std::span<const double> noise, double snr_db);

/// signal + g noise with g = snr_gain(...); the scaled noise is written to
/// scaled_noise when given.
std::vector<double> mix_at_snr(std::span<const double> signal, std::span<const double> noise,
                               double snr_db, std::vector<double>* scaled_noise = nullptr);

}  // namespace anmf
