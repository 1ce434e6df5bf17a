#include "anmf/kernels.hpp"

#include <omp.h>

#include <vector>

namespace anmf::kernels {

namespace {

Index block_count(Index n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

Matrix at_b(const Matrix& a, const Matrix& b) {
  require_rows_match("at_b", "a", a, "b", b);
  Matrix out(a.cols(), b.cols());
  const Index blocks = block_count(b.cols());
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < blocks; ++k) {
    const Index c0 = k * kBlock;
    const Index len = std::min(kBlock, b.cols() - c0);
    out.middleCols(c0, len).noalias() = a.transpose() * b.middleCols(c0, len);
  }
  return out;
}

Matrix a_bt(const Matrix& a, const Matrix& b) {
  require_cols_match("a_bt", "a", a, "b", b);
  Matrix out(a.rows(), b.rows());
  const Index blocks = block_count(a.rows());
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < blocks; ++k) {
    const Index r0 = k * kBlock;
    const Index len = std::min(kBlock, a.rows() - r0);
    out.middleRows(r0, len).noalias() = a.middleRows(r0, len) * b.transpose();
  }
  return out;
}

Matrix a_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw_dimension("a_b", "a", a.rows(), a.cols(), "b", b.rows(), b.cols());
  Matrix out(a.rows(), b.cols());
  const Index blocks = block_count(b.cols());
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < blocks; ++k) {
    const Index c0 = k * kBlock;
    const Index len = std::min(kBlock, b.cols() - c0);
    out.middleCols(c0, len).noalias() = a * b.middleCols(c0, len);
  }
  return out;
}

Matrix gram(const Matrix& a) { return at_b(a, a); }

void multiplicative_step(Matrix& x, const Matrix& num, const Matrix& den, double floor) {
  require_same_shape("multiplicative_step", "x", x, "numerator", num);
  require_same_shape("multiplicative_step", "x", x, "denominator", den);
  const Index cols = x.cols();
  const Index rows = x.rows();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) x(i, j) = x(i, j) * num(i, j) / (den(i, j) + floor);
}

double squared_residual(const Matrix& u, const Matrix& w, const Matrix& h) {
  if (w.cols() != h.rows())
    throw_dimension("squared_residual", "w", w.rows(), w.cols(), "h", h.rows(), h.cols());
  if (u.rows() != w.rows() || u.cols() != h.cols())
    throw_dimension("squared_residual", "u", u.rows(), u.cols(), "w*h", w.rows(), h.cols());
  const Index blocks = block_count(u.cols());
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < blocks; ++k) {
    const Index c0 = k * kBlock;
    const Index len = std::min(kBlock, u.cols() - c0);
    const Matrix diff = u.middleCols(c0, len) - w * h.middleCols(c0, len);
    partial[static_cast<std::size_t>(k)] = diff.squaredNorm();
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

Matrix gather_columns(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

namespace serial {

Matrix at_b(const Matrix& a, const Matrix& b) {
  require_rows_match("serial::at_b", "a", a, "b", b);
  Matrix out = Matrix::Zero(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < a.cols(); ++i) {
      double s = 0.0;
      for (Index k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix a_bt(const Matrix& a, const Matrix& b) {
  require_cols_match("serial::a_bt", "a", a, "b", b);
  Matrix out = Matrix::Zero(a.rows(), b.rows());
  for (Index k = 0; k < a.cols(); ++k)
    for (Index j = 0; j < b.rows(); ++j)
      for (Index i = 0; i < a.rows(); ++i) out(i, j) += a(i, k) * b(j, k);
  return out;
}

Matrix a_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw_dimension("serial::a_b", "a", a.rows(), a.cols(), "b", b.rows(), b.cols());
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index k = 0; k < a.cols(); ++k)
      for (Index i = 0; i < a.rows(); ++i) out(i, j) += a(i, k) * b(k, j);
  return out;
}

Matrix gram(const Matrix& a) { return at_b(a, a); }

void multiplicative_step(Matrix& x, const Matrix& num, const Matrix& den, double floor) {
  require_same_shape("serial::multiplicative_step", "x", x, "numerator", num);
  require_same_shape("serial::multiplicative_step", "x", x, "denominator", den);
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) x(i, j) = x(i, j) * num(i, j) / (den(i, j) + floor);
}

double squared_residual(const Matrix& u, const Matrix& w, const Matrix& h) {
  const Matrix wh = a_b(w, h);
  if (wh.rows() != u.rows() || wh.cols() != u.cols())
    throw_dimension("serial::squared_residual", "u", u.rows(), u.cols(), "w*h", wh.rows(),
                    wh.cols());
  double total = 0.0;
  for (Index j = 0; j < u.cols(); ++j)
    for (Index i = 0; i < u.rows(); ++i) {
      const double r = u(i, j) - wh(i, j);
      total += r * r;
    }
  return total;
}

}  // namespace serial

}  // namespace anmf::kernels
