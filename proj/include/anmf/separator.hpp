#pragma once

#include "anmf/common.hpp"
#include "anmf/model_core.hpp"

#include <span>
#include <vector>

namespace anmf {

struct SeparationResult {
  std::vector<Latents> latents;  ///< h_i*, d_i x N per source
  std::vector<Matrix> raw;       ///< W_i h_i*
  std::vector<Matrix> filtered;  ///< Wiener-filtered estimates, summing to V
  Vector residual;               ///< ||v - sum_i W_i h_i*||_2 per column
};

/// [W_1 ... W_S].
Matrix concat_bases(std::span<const Basis> bases);

/// Solves min_{h >= 0} ||v - W h||^2 + mu_H |h|_1 column by column for the
/// concatenated bases, then splits h per source and applies the Wiener filter.
/// Columns are solved independently (in parallel), each from `init` or an
/// all-ones start.
SeparationResult separate(const Matrix& V, std::span<const Basis> bases, const SparsityParams& p,
                          const SolverOptions& opt = {}, const Matrix* init = nullptr);

/// Same result as separate(), solving the columns one after another.
SeparationResult separate_serial(const Matrix& V, std::span<const Basis> bases,
                                 const SparsityParams& p, const SolverOptions& opt = {},
                                 const Matrix* init = nullptr);

/// u_i = v .* raw_i ./ sum_j raw_j. Entries whose denominator is <= eps get
/// v / S for every source.
std::vector<Vector> wiener_filter(const Vector& v, std::span<const Vector> raw, double eps = kEps);
std::vector<Matrix> wiener_filter(const Matrix& V, std::span<const Matrix> raw, double eps = kEps);

/// Projection denoising: W h* with h* the non-negative coefficients of each
/// column of V on the given basis alone.
Matrix project_denoise(const Matrix& V, const Basis& basis, const SparsityParams& p,
                       const SolverOptions& opt = {});

}  // namespace anmf
