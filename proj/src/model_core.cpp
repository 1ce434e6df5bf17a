#include "anmf/model_core.hpp"

#include "anmf/kernels.hpp"
#include "anmf/rng.hpp"

#include <cfloat>
#include <cmath>
#include <numeric>

namespace anmf {

Latents update_latents(const Latents& H, const Matrix& W, const Matrix& U,
                       const SparsityParams& p, double n_scale) {
  if (W.cols() != H.rows())
    throw_dimension("update_latents", "W", W.rows(), W.cols(), "H", H.rows(), H.cols());
  require_rows_match("update_latents", "W", W, "U", U);
  require_cols_match("update_latents", "H", H, "U", U);
  if (!(n_scale > 0.0)) throw Error("update_latents: n_scale must be positive");

  const Matrix num = kernels::at_b(W, U) / n_scale;
  const Matrix den = kernels::a_b(kernels::gram(W), H) / n_scale;
  Latents out = H;
  kernels::multiplicative_step(out, num, den, p.mu_H + p.eps);
  return out;
}

int solve_nonnegative_column(const Matrix& gram, const Vector& wtu, double floor,
                             const SolverOptions& opt, Vector& h) {
  int it = 0;
  Vector next(h.size());
  while (it < opt.max_iter) {
    ++it;
    const Vector den = gram * h;
    for (Index k = 0; k < h.size(); ++k) next(k) = h(k) * wtu(k) / (den(k) + floor);
    const double change = (next - h).norm();
    const double scale = h.norm();
    h.swap(next);
    if (change <= opt.tol * std::max(scale, DBL_MIN)) break;
  }
  return it;
}

ConeProjection cone_distance(const Matrix& W, const Vector& u, const SparsityParams& p,
                             const SolverOptions& opt) {
  require_rows_match("cone_distance", "W", W, "u", u);
  ConeProjection out;
  out.h = Vector::Ones(W.cols());
  const Matrix gram = W.transpose() * W;
  const Vector wtu = W.transpose() * u;
  out.iterations = solve_nonnegative_column(gram, wtu, p.mu_H + p.eps, opt, out.h);
  out.distance = (u - W * out.h).norm();
  return out;
}

std::vector<Index> exemplar_indices(Index n, Index d, std::uint64_t seed) {
  if (n < 1) throw Error("exemplar initialization needs at least one data column");
  if (d < 1) throw Error("exemplar initialization needs d >= 1");
  Rng rng(seed);
  std::vector<Index> picked(static_cast<std::size_t>(d));
  if (n >= d) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index k = 0; k < d; ++k) {
      const auto j = k + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n - k)));
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(j)]);
    }
    std::copy_n(idx.begin(), d, picked.begin());
  } else {
    for (auto& v : picked) v = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  }
  return picked;
}

Basis init_exemplar(const Matrix& U, Index d, std::uint64_t seed, int source_id) {
  const auto cols = exemplar_indices(U.cols(), d, seed);
  return Basis{kernels::gather_columns(U, cols), source_id};
}

Basis init_random(Index m, Index d, std::uint64_t seed, int source_id) {
  if (m < 1 || d < 1) throw Error("init_random: m and d must be at least 1");
  Rng rng(seed);
  Matrix W(m, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < m; ++i) W(i, j) = rng.uniform_open_closed();
  for (Index j = 0; j < d; ++j) W.col(j) /= W.col(j).norm();
  return Basis{std::move(W), source_id};
}

Vector normalize_columns(Matrix& W, std::span<Matrix* const> partners, double eps) {
  for (const Matrix* h : partners)
    if (h->rows() != W.cols())
      throw_dimension("normalize_columns", "W", W.rows(), W.cols(), "partner", h->rows(),
                      h->cols());

  Vector scales = Vector::Ones(W.cols());
  for (Index j = 0; j < W.cols(); ++j) {
    const double norm = W.col(j).norm();
    if (norm == 0.0 || std::abs(norm - 1.0) <= 4.0 * DBL_EPSILON) continue;
    const double divisor = std::max(norm, eps);
    W.col(j) /= divisor;
    scales(j) = divisor;
  }
  for (Matrix* h : partners) scale_rows(*h, scales);
  return scales;
}

void scale_rows(Matrix& m, const Vector& scales, Index offset) {
  if (offset < 0 || offset + scales.size() > m.rows())
    throw_dimension("scale_rows", "matrix", m.rows(), m.cols(), "scales", scales.size(), 1);
  for (Index j = 0; j < scales.size(); ++j)
    if (scales(j) != 1.0) m.row(offset + j) *= scales(j);
}

}  // namespace anmf
