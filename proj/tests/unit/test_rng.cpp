#include "anmf/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace anmf;

TEST_CASE("derive_seed separates streams and is a pure function") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(7, s));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("uniform_index follows the documented rejection procedure") {
  const std::uint64_t n = 7;
  Rng rng(42);
  std::mt19937_64 raw(42);
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  for (int k = 0; k < 1000; ++k) {
    std::uint64_t x;
    do x = raw(); while (x >= limit);
    CHECK(rng.uniform_index(n) == x % n);
  }
  CHECK_THROWS_AS(rng.uniform_index(0), Error);
}

TEST_CASE("uniform_open_closed stays in (0, 1] and replays the raw stream") {
  Rng rng(5);
  std::mt19937_64 raw(5);
  for (int k = 0; k < 10000; ++k) {
    const double u = rng.uniform_open_closed();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
    CHECK(u == static_cast<double>((raw() >> 11) + 1) / 9007199254740992.0);
  }
}

TEST_CASE("permutation is a replayable Fisher-Yates shuffle") {
  Rng rng(11);
  const auto p = rng.permutation(50);
  std::vector<Index> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (Index k = 0; k < 50; ++k) CHECK(sorted[static_cast<std::size_t>(k)] == k);

  Rng replay(11);
  std::vector<Index> q(50);
  for (Index k = 0; k < 50; ++k) q[static_cast<std::size_t>(k)] = k;
  for (Index i = 49; i > 0; --i)
    std::swap(q[static_cast<std::size_t>(i)], q[replay.uniform_index(static_cast<std::uint64_t>(i + 1))]);
  CHECK(p == q);
  CHECK(Rng(3).permutation(0).empty());
  CHECK(Rng(3).permutation(1) == std::vector<Index>{0});
}

TEST_CASE("equal seeds give equal generators") {
  Rng a(9);
  Rng b(9);
  CHECK(a == b);
  a.next();
  CHECK_FALSE(a == b);
  b.next();
  CHECK(a == b);
}
