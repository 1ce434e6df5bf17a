#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace anmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Latent activations paired column-for-column with a data matrix.
using Latents = Matrix;

/// Hard floor added to every multiplicative-update denominator.
inline constexpr double kEps = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when matrix shapes do not line up; the message names both shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

std::string shape_string(Index rows, Index cols);

template <typename A>
std::string shape_of(const A& a) {
  return shape_string(a.rows(), a.cols());
}

[[noreturn]] void throw_dimension(std::string_view what, std::string_view lhs_name, Index lhs_rows,
                                  Index lhs_cols, std::string_view rhs_name, Index rhs_rows,
                                  Index rhs_cols);

template <typename A, typename B>
void require_rows_match(std::string_view what, std::string_view a_name, const A& a,
                        std::string_view b_name, const B& b) {
  if (a.rows() != b.rows())
    throw_dimension(what, a_name, a.rows(), a.cols(), b_name, b.rows(), b.cols());
}

template <typename A, typename B>
void require_cols_match(std::string_view what, std::string_view a_name, const A& a,
                        std::string_view b_name, const B& b) {
  if (a.cols() != b.cols())
    throw_dimension(what, a_name, a.rows(), a.cols(), b_name, b.rows(), b.cols());
}

template <typename A, typename B>
void require_same_shape(std::string_view what, std::string_view a_name, const A& a,
                        std::string_view b_name, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw_dimension(what, a_name, a.rows(), a.cols(), b_name, b.rows(), b.cols());
}

/// Sparsity weights of the factorization objective plus the safe-division floor.
struct SparsityParams {
  double mu_W = 1e-10;
  double mu_H = 1e-10;
  double eps = kEps;

  void validate() const;
};

/// Non-negative basis of one source, m x d.
struct Basis {
  Matrix entries;
  int source_id = 0;

  Index rows() const { return entries.rows(); }
  Index cols() const { return entries.cols(); }
};

enum class DataKind { source, mix, adversarial, supervised };

/// Column-wise signals of one role (source samples, mixes, ...).
struct DataMatrix {
  Matrix entries;
  DataKind kind = DataKind::source;
};

bool is_nonnegative(const Matrix& m);

}  // namespace anmf
