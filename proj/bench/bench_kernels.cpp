// Serial reference kernels against the OpenMP versions, on update-sized shapes.
// Arguments are (N, d) with m = 257 rows, as for 512-point spectra.

#include "anmf/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace anmf;

namespace {

constexpr Index kRows = 257;

Matrix uniform(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = u(gen);
  return m;
}

struct Shapes {
  Matrix U, W, H;
  explicit Shapes(const benchmark::State& s)
      : U(uniform(kRows, s.range(0), 1)), W(uniform(kRows, s.range(1), 2)), H(uniform(s.range(1), s.range(0), 3)) {}
};

template <bool Parallel>
void BM_at_b(benchmark::State& state) {
  const Shapes x(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::at_b(x.W, x.U) : kernels::serial::at_b(x.W, x.U));
}

template <bool Parallel>
void BM_a_bt(benchmark::State& state) {
  const Shapes x(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::a_bt(x.U, x.H) : kernels::serial::a_bt(x.U, x.H));
}

template <bool Parallel>
void BM_a_b(benchmark::State& state) {
  const Shapes x(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::a_b(x.W, x.H) : kernels::serial::a_b(x.W, x.H));
}

template <bool Parallel>
void BM_gram(benchmark::State& state) {
  const Shapes x(state);
  for (auto _ : state) benchmark::DoNotOptimize(Parallel ? kernels::gram(x.W) : kernels::serial::gram(x.W));
}

template <bool Parallel>
void BM_multiplicative_step(benchmark::State& state) {
  const Shapes x(state);
  const Matrix den = uniform(x.H.rows(), x.H.cols(), 5);
  Matrix h = x.H;
  for (auto _ : state) {
    // num == den keeps h fixed across iterations.
    if constexpr (Parallel)
      kernels::multiplicative_step(h, den, den, 0.0);
    else
      kernels::serial::multiplicative_step(h, den, den, 0.0);
    benchmark::DoNotOptimize(h.data());
  }
}

template <bool Parallel>
void BM_squared_residual(benchmark::State& state) {
  const Shapes x(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::squared_residual(x.U, x.W, x.H)
                                      : kernels::serial::squared_residual(x.U, x.W, x.H));
}

void shapes(benchmark::internal::Benchmark* b) {
  for (int n : {500, 4000})
    for (int d : {16, 64}) b->Args({n, d});
  b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_at_b<false>)->Apply(shapes);
BENCHMARK(BM_at_b<true>)->Apply(shapes);
BENCHMARK(BM_a_bt<false>)->Apply(shapes);
BENCHMARK(BM_a_bt<true>)->Apply(shapes);
BENCHMARK(BM_a_b<false>)->Apply(shapes);
BENCHMARK(BM_a_b<true>)->Apply(shapes);
BENCHMARK(BM_gram<false>)->Apply(shapes);
BENCHMARK(BM_gram<true>)->Apply(shapes);
BENCHMARK(BM_multiplicative_step<false>)->Apply(shapes);
BENCHMARK(BM_multiplicative_step<true>)->Apply(shapes);
BENCHMARK(BM_squared_residual<false>)->Apply(shapes);
BENCHMARK(BM_squared_residual<true>)->Apply(shapes);

BENCHMARK_MAIN();
