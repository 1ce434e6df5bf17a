#include "anmf/common.hpp"
#include "anmf/rng.hpp"

#include <numeric>
#include <sstream>

namespace anmf {

std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

void throw_dimension(std::string_view what, std::string_view lhs_name, Index lhs_rows,
                     Index lhs_cols, std::string_view rhs_name, Index rhs_rows, Index rhs_cols) {
  std::ostringstream os;
  os << what << ": shape mismatch between " << lhs_name << " (" << shape_string(lhs_rows, lhs_cols)
     << ") and " << rhs_name << " (" << shape_string(rhs_rows, rhs_cols) << ")";
  throw DimensionError(os.str());
}

void SparsityParams::validate() const {
  if (!(mu_W >= 0.0) || !(mu_H >= 0.0))
    throw Error("sparsity parameters mu_W and mu_H must be non-negative");
  if (!(eps > 0.0)) throw Error("safe-division floor eps must be positive");
}

bool is_nonnegative(const Matrix& m) { return m.size() == 0 || m.minCoeff() >= 0.0; }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw Error("uniform_index: empty range");
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit) return x % n;
  }
}

double Rng::uniform_open_closed() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::vector<Index> Rng::permutation(Index n) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace anmf
