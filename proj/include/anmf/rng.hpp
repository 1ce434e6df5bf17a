#pragma once

#include "anmf/common.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace anmf {

/// Mixes a master seed with a stream index (splitmix64 finalizer). Used to
/// give every source, trial and fold its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded generator with a documented draw procedure so that sample streams can
/// be replayed outside the library:
///   - raw draws come from std::mt19937_64 seeded with the given seed;
///   - uniform_index(n) rejects raw draws x >= n * floor(2^64 / n), returns x % n;
///   - uniform_open_closed() returns ((x >> 11) + 1) * 2^-53, in (0, 1];
///   - permutation(n) is Fisher-Yates from the back: for i = n-1..1 swap
///     p[i] with p[uniform_index(i + 1)].
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t uniform_index(std::uint64_t n);
  double uniform_open_closed();
  double uniform01();
  std::vector<Index> permutation(Index n);

  std::mt19937_64& engine() { return engine_; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace anmf
