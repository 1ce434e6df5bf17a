#pragma once

#include "anmf/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace anmf {

/// Stopping rule for the inner non-negative least-squares iterations.
struct SolverOptions {
  int max_iter = 500;
  double tol = 1e-8;  ///< on ||h_new - h|| / ||h||
};

/// One multiplicative step on the latent variables,
///   H .* (W^T U / n) ./ (W^T W H / n + mu_H + eps).
/// n_scale is the 1/N weighting of the term the latents belong to; pass 1 for
/// the unscaled update. Zero entries of H stay zero.
Latents update_latents(const Latents& H, const Matrix& W, const Matrix& U,
                       const SparsityParams& p, double n_scale = 1.0);

/// Solves min_{h >= 0} ||u - W h||^2 + mu_H |h|_1 for one column by iterating
/// the latent update with precomputed W^T W and W^T u, starting from h.
/// Returns the iteration count.
int solve_nonnegative_column(const Matrix& gram, const Vector& wtu, double floor,
                             const SolverOptions& opt, Vector& h);

struct ConeProjection {
  Vector h;
  double distance = 0.0;  ///< ||u - W h||_2
  int iterations = 0;
};

/// Projection of u onto the convex cone spanned by the columns of W, computed
/// from an all-ones start.
ConeProjection cone_distance(const Matrix& W, const Vector& u, const SparsityParams& p,
                             const SolverOptions& opt = {});

/// Column indices picked by exemplar initialization: a partial Fisher-Yates
/// shuffle (without replacement) when n >= d, independent uniform draws
/// otherwise. Both use Rng(seed).
std::vector<Index> exemplar_indices(Index n, Index d, std::uint64_t seed);

/// Basis whose columns are randomly sampled data columns.
Basis init_exemplar(const Matrix& U, Index d, std::uint64_t seed, int source_id = 0);

/// Basis with entries uniform on (0, 1], columns scaled to unit Euclidean norm.
Basis init_random(Index m, Index d, std::uint64_t seed, int source_id = 0);

/// Scales every column of W to unit Euclidean norm and multiplies the matching
/// row of each partner by the same factor, so W * H is unchanged.
///
/// Zero columns are left alone (partner rows too). Columns already within a
/// few ulps of unit norm are skipped so that the call is idempotent. Norms
/// below eps are divided by eps. Returns the factor applied to each column
/// (1 where skipped).
Vector normalize_columns(Matrix& W, std::span<Matrix* const> partners, double eps = kEps);

/// Multiplies rows [offset, offset + scales.size()) of m by scales.
void scale_rows(Matrix& m, const Vector& scales, Index offset = 0);

}  // namespace anmf
