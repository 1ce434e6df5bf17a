#pragma once

#include "anmf/common.hpp"

#include <vector>

namespace anmf::kernels {

// Data-parallel building blocks of the multiplicative updates.
//
// The OpenMP versions split work into fixed-width blocks (kBlock rows or
// columns) and never reduce across blocks in a thread-dependent order, so
// their output is bitwise independent of the thread count. The serial
// namespace keeps plain-loop reference versions for tests and benchmarks.

inline constexpr Index kBlock = 64;

/// a^T b.
Matrix at_b(const Matrix& a, const Matrix& b);
/// a b^T.
Matrix a_bt(const Matrix& a, const Matrix& b);
/// a b.
Matrix a_b(const Matrix& a, const Matrix& b);
/// a^T a.
Matrix gram(const Matrix& a);

/// x <- x .* num ./ (den + floor), entrywise.
void multiplicative_step(Matrix& x, const Matrix& num, const Matrix& den, double floor);

/// ||u - w h||_F^2.
double squared_residual(const Matrix& u, const Matrix& w, const Matrix& h);

/// Copies the listed columns of m into a new matrix, in order.
Matrix gather_columns(const Matrix& m, const std::vector<Index>& cols);

int max_threads();
void set_threads(int n);

namespace serial {

Matrix at_b(const Matrix& a, const Matrix& b);
Matrix a_bt(const Matrix& a, const Matrix& b);
Matrix a_b(const Matrix& a, const Matrix& b);
Matrix gram(const Matrix& a);
void multiplicative_step(Matrix& x, const Matrix& num, const Matrix& den, double floor);
double squared_residual(const Matrix& u, const Matrix& w, const Matrix& h);

}  // namespace serial

}  // namespace anmf::kernels
