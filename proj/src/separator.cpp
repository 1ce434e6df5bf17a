#include "anmf/separator.hpp"

#include "anmf/kernels.hpp"

namespace anmf {

namespace {

void check_bases(const Matrix& V, std::span<const Basis> bases) {
  if (bases.empty()) throw Error("separate: no bases given");
  for (const auto& b : bases) require_rows_match("separate", "basis", b.entries, "V", V);
}

Matrix solve_columns(const Matrix& W, const Matrix& V, const SparsityParams& p,
                     const SolverOptions& opt, const Matrix* init, bool parallel) {
  if (init != nullptr && (init->rows() != W.cols() || init->cols() != V.cols()))
    throw_dimension("separate", "initial latents", init->rows(), init->cols(), "expected",
                    W.cols(), V.cols());
  const Matrix gram = W.transpose() * W;
  const Matrix wtv = kernels::at_b(W, V);
  const double floor = p.mu_H + p.eps;
  Matrix H = init != nullptr ? *init : Matrix::Ones(W.cols(), V.cols());
  const Index n = V.cols();
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (Index j = 0; j < n; ++j) {
    Vector h = H.col(j);
    solve_nonnegative_column(gram, wtv.col(j), floor, opt, h);
    H.col(j) = h;
  }
  return H;
}

SeparationResult assemble(const Matrix& V, std::span<const Basis> bases, const Matrix& H,
                          double eps) {
  SeparationResult out;
  Index off = 0;
  Matrix total = Matrix::Zero(V.rows(), V.cols());
  for (const auto& b : bases) {
    out.latents.push_back(H.middleRows(off, b.cols()));
    out.raw.push_back(kernels::a_b(b.entries, out.latents.back()));
    total += out.raw.back();
    off += b.cols();
  }
  out.filtered = wiener_filter(V, out.raw, eps);
  out.residual = (V - total).colwise().norm().transpose();
  return out;
}

SeparationResult separate_impl(const Matrix& V, std::span<const Basis> bases,
                               const SparsityParams& p, const SolverOptions& opt,
                               const Matrix* init, bool parallel) {
  check_bases(V, bases);
  p.validate();
  const Matrix W = concat_bases(bases);
  const Matrix H = solve_columns(W, V, p, opt, init, parallel);
  return assemble(V, bases, H, p.eps);
}

}  // namespace

Matrix concat_bases(std::span<const Basis> bases) {
  Index total = 0;
  for (const auto& b : bases) total += b.cols();
  Matrix W(bases.empty() ? 0 : bases.front().rows(), total);
  Index off = 0;
  for (const auto& b : bases) {
    if (b.rows() != W.rows())
      throw_dimension("concat_bases", "basis", b.rows(), b.cols(), "first basis", W.rows(), 0);
    W.middleCols(off, b.cols()) = b.entries;
    off += b.cols();
  }
  return W;
}

SeparationResult separate(const Matrix& V, std::span<const Basis> bases, const SparsityParams& p,
                          const SolverOptions& opt, const Matrix* init) {
  return separate_impl(V, bases, p, opt, init, true);
}

SeparationResult separate_serial(const Matrix& V, std::span<const Basis> bases,
                                 const SparsityParams& p, const SolverOptions& opt,
                                 const Matrix* init) {
  return separate_impl(V, bases, p, opt, init, false);
}

std::vector<Vector> wiener_filter(const Vector& v, std::span<const Vector> raw, double eps) {
  std::vector<Matrix> mats;
  mats.reserve(raw.size());
  for (const auto& r : raw) mats.emplace_back(r);
  const auto filtered = wiener_filter(Matrix(v), mats, eps);
  std::vector<Vector> out;
  out.reserve(filtered.size());
  for (const auto& f : filtered) out.emplace_back(f.col(0));
  return out;
}

std::vector<Matrix> wiener_filter(const Matrix& V, std::span<const Matrix> raw, double eps) {
  if (raw.empty()) throw Error("wiener_filter: no reconstructions given");
  for (const auto& r : raw) require_same_shape("wiener_filter", "reconstruction", r, "mix", V);
  const auto S = static_cast<double>(raw.size());
  Matrix denom = Matrix::Zero(V.rows(), V.cols());
  for (const auto& r : raw) denom += r;

  std::vector<Matrix> out(raw.size(), Matrix(V.rows(), V.cols()));
  for (Index j = 0; j < V.cols(); ++j)
    for (Index i = 0; i < V.rows(); ++i) {
      const double den = denom(i, j);
      for (std::size_t s = 0; s < raw.size(); ++s)
        out[s](i, j) = den > eps ? V(i, j) * raw[s](i, j) / den : V(i, j) / S;
    }
  return out;
}

Matrix project_denoise(const Matrix& V, const Basis& basis, const SparsityParams& p,
                       const SolverOptions& opt) {
  require_rows_match("project_denoise", "basis", basis.entries, "V", V);
  p.validate();
  const Matrix H = solve_columns(basis.entries, V, p, opt, nullptr, true);
  return kernels::a_b(basis.entries, H);
}

}  // namespace anmf
