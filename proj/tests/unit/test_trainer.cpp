#include "anmf/trainer.hpp"

#include "anmf/kernels.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace anmf;

namespace {

SparsityParams tiny_sparsity() {
  SparsityParams p;
  p.mu_W = 0.0;
  p.mu_H = 0.0;
  return p;
}

// Plain full-batch NMF loop with the same initialization and update order.
struct PlainNmf {
  Matrix W;
  Matrix H;
  std::vector<double> history;
};

PlainNmf plain_nmf(const Matrix& U, Index d, const SparsityParams& p, int epochs, std::uint64_t seed) {
  const auto N = static_cast<double>(U.cols());
  PlainNmf r;
  r.W = init_exemplar(U, d, init_seed(seed, 0)).entries;
  r.H = update_latents(Matrix::Ones(d, U.cols()), r.W, U, p, N);
  auto obj = [&] { return kernels::squared_residual(U, r.W, r.H) / N + p.mu_W * r.W.cwiseAbs().sum(); };
  r.history.push_back(obj());
  for (int e = 0; e < epochs; ++e) {
    Matrix* partners[] = {&r.H};
    normalize_columns(r.W, partners);
    r.H = update_latents(r.H, r.W, U, p, N);
    const Matrix plus = kernels::a_b(r.W, kernels::a_bt(r.H, r.H)) / N;
    const Matrix minus = kernels::a_bt(U, r.H) / N;
    kernels::multiplicative_step(r.W, (1.0 - 0.0) * minus, plus, p.mu_W + p.eps);
    normalize_columns(r.W, partners);
    r.history.push_back(obj());
  }
  return r;
}

// Two sources drawn from partly overlapping non-negative dictionaries.
std::vector<Matrix> two_sources(std::mt19937_64& gen, Index m, Index n) {
  const Matrix D0 = oracle::random_matrix(m, 4, gen);
  const Matrix D1 = oracle::random_matrix(m, 4, gen);
  return {D0 * oracle::random_matrix(4, n, gen), D1 * oracle::random_matrix(4, n, gen)};
}

}  // namespace

TEST_CASE("method taxonomy") {
  CHECK(classify(0.0, 0.0) == Method::nmf);
  CHECK(classify(0.3, 0.0) == Method::anmf);
  CHECK(classify(0.0, 1.0) == Method::dnmf);
  CHECK(classify(0.3, 1.0) == Method::dnmf);
  CHECK(classify(0.0, 0.5) == Method::danmf);
  CHECK(classify(0.2, 0.5) == Method::danmf);
}

TEST_CASE("grad_parts_std matches triple loops") {
  std::mt19937_64 gen(30);
  const Matrix W = oracle::random_matrix(3, 2, gen);
  const Matrix H = oracle::random_matrix(2, 5, gen);
  const Matrix U = oracle::random_matrix(3, 5, gen);
  const GradParts g = grad_parts_std(W, U, H, 5);
  const Matrix Ht = oracle::transpose(H);
  CHECK(oracle::max_abs_diff(g.plus, oracle::matmul(oracle::matmul(W, H), Ht) / 5.0) < 1e-12);
  CHECK(oracle::max_abs_diff(g.minus, oracle::matmul(U, Ht) / 5.0) < 1e-12);

  const GradParts z = grad_parts_std(W, U, Matrix::Zero(2, 5), 5);
  CHECK(z.plus.isZero(0.0));
  CHECK(z.minus.isZero(0.0));
  CHECK_THROWS_AS(grad_parts_std(W, U, H, 0), Error);
  CHECK_THROWS_AS(grad_parts_std(W, U, Matrix::Ones(3, 5), 5), DimensionError);
}

TEST_CASE("grad_parts_sup mirrors the standard parts") {
  std::mt19937_64 gen(31);
  const Matrix W = oracle::random_matrix(3, 2, gen);
  const Matrix H = oracle::random_matrix(2, 5, gen);
  const Matrix U = oracle::random_matrix(3, 5, gen);
  const GradParts g = grad_parts_sup(W, U, H, 5);
  const Matrix Ht = oracle::transpose(H);
  CHECK(oracle::max_abs_diff(g.plus, oracle::matmul(oracle::matmul(W, H), Ht) / 5.0) < 1e-12);
  CHECK(oracle::max_abs_diff(g.minus, oracle::matmul(U, Ht) / 5.0) < 1e-12);
  CHECK(grad_parts_sup(W, U, Matrix::Zero(2, 5), 5).plus.isZero(0.0));
  CHECK_THROWS_AS(grad_parts_sup(W, U, H, 0), Error);
}

TEST_CASE("adversarial parts swap the roles of data and Gram products") {
  std::mt19937_64 gen(32);
  const Matrix W = oracle::random_matrix(4, 3, gen);
  const Matrix H = oracle::random_matrix(3, 6, gen);
  const Matrix U = oracle::random_matrix(4, 6, gen);
  const GradParts s = grad_parts_std(W, U, H, 6);
  const GradParts a = grad_parts_adv(W, U, H, 0.25, 6);
  CHECK(oracle::max_abs_diff(a.plus, 0.25 * s.minus) < 1e-14);
  CHECK(oracle::max_abs_diff(a.minus, 0.25 * s.plus) < 1e-14);

  const GradParts zero_tau = grad_parts_adv(W, U, H, 0.0, 6);
  CHECK(zero_tau.plus.isZero(0.0));
  CHECK(zero_tau.minus.isZero(0.0));
  const GradParts zero_h = grad_parts_adv(W, U, Matrix::Zero(3, 6), 0.25, 6);
  CHECK(zero_h.plus.isZero(0.0));
  CHECK(zero_h.minus.isZero(0.0));
}

TEST_CASE("update_basis matches a scalar loop") {
  std::mt19937_64 gen(33);
  const Matrix W = oracle::random_matrix(5, 3, gen);
  auto parts = [&] { return GradParts{oracle::random_matrix(5, 3, gen), oracle::random_matrix(5, 3, gen)}; };
  const GradParts s = parts();
  const GradParts a = parts();
  const GradParts u = parts();
  const double tS = 0.3;
  const double mu = 0.01;
  const double eps = 1e-12;
  Matrix expect(5, 3);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) {
      const double num = (1 - tS) * (s.minus(i, j) + a.minus(i, j)) + tS * u.minus(i, j);
      const double den = (1 - tS) * (s.plus(i, j) + a.plus(i, j)) + tS * u.plus(i, j) + mu + eps;
      expect(i, j) = W(i, j) * num / den;
    }
  CHECK(oracle::max_abs_diff(update_basis(W, s, a, u, tS, mu, eps), expect) < 1e-12);
}

TEST_CASE("update_basis fixed point and supervised-only update") {
  std::mt19937_64 gen(34);
  const Matrix W = oracle::random_matrix(6, 3, gen, 0.5, 1.5);
  Matrix W0 = W;
  W0(2, 1) = 0.0;
  const Matrix H = oracle::random_matrix(3, 10, gen, 0.5, 1.5);
  const GradParts s = grad_parts_std(W0, W0 * H, H, 10);
  const Matrix next = update_basis(W0, s, {}, {}, 0.0, 0.0);
  CHECK((next - W0).norm() <= 1e-12 * W0.norm());
  CHECK(next(2, 1) == 0.0);

  const GradParts sup = grad_parts_sup(W, oracle::random_matrix(6, 10, gen), H, 10);
  const GradParts other = grad_parts_std(W, oracle::random_matrix(6, 10, gen), H, 10);
  const Matrix only_sup = update_basis(W, {}, {}, sup, 1.0, 0.0);
  CHECK(oracle::bitwise_equal(update_basis(W, other, other, sup, 1.0, 0.0), only_sup));
}

TEST_CASE("single-batch NMF equals the plain multiplicative loop bitwise") {
  std::mt19937_64 gen(35);
  const Matrix U = oracle::random_matrix(10, 40, gen);
  TrainSpec spec;
  spec.d = {4};
  spec.epochs = 15;
  spec.batch_size = 1000;
  spec.seed = 77;
  const TrainData data = make_train_data({U}, Matrix(10, 0), spec);
  const TrainState st = train_smu(data, spec);
  const PlainNmf ref = plain_nmf(U, 4, spec.sparsity, 15, 77);
  CHECK(oracle::bitwise_equal(st.bases[0].entries, ref.W));
  CHECK(oracle::bitwise_equal(st.latents_true[0], ref.H));
  CHECK(st.history == ref.history);
  CHECK(st.counters.adv_parts == 0);
  CHECK(st.counters.sup_parts == 0);
}

TEST_CASE("zero epochs return the initialization") {
  std::mt19937_64 gen(36);
  const Matrix U = oracle::random_matrix(6, 20, gen);
  TrainSpec spec;
  spec.d = {3};
  spec.epochs = 0;
  spec.seed = 4;
  const TrainState st = train_smu(make_train_data({U}, Matrix(6, 0), spec), spec);
  CHECK(oracle::bitwise_equal(st.bases[0].entries, init_exemplar(U, 3, init_seed(4, 0)).entries));
  CHECK(st.history.size() == 1);
  CHECK(st.epoch == 0);
}

TEST_CASE("training is deterministic, non-negative and thread-count independent") {
  std::mt19937_64 gen(37);
  const auto sources = two_sources(gen, 12, 60);
  const Matrix V = 0.5 * (sources[0] + sources[1]).leftCols(30);
  TrainSpec spec;
  spec.d = {5};
  spec.tau_A = 0.1;
  spec.epochs = 8;
  spec.batch_size = 16;
  spec.seed = 9;
  const TrainData data = make_train_data(sources, V, spec);

  const int saved = kernels::max_threads();
  kernels::set_threads(1);
  const TrainState a = train_smu(data, spec);
  kernels::set_threads(4);
  const TrainState b = train_smu(data, spec);
  kernels::set_threads(saved);

  for (int i = 0; i < 2; ++i) {
    CHECK(oracle::bitwise_equal(a.bases[i].entries, b.bases[i].entries));
    CHECK(oracle::bitwise_equal(a.latents_true[i], b.latents_true[i]));
    CHECK(oracle::bitwise_equal(a.latents_adv[i], b.latents_adv[i]));
    CHECK((a.bases[i].entries.array() >= 0.0).all());
    CHECK((a.latents_true[i].array() >= 0.0).all());
    CHECK((a.latents_adv[i].array() >= 0.0).all());
  }
  CHECK(a.history == b.history);
  CHECK(a.rng == b.rng);
}

TEST_CASE("ANMF run on separable data improves its objective") {
  std::mt19937_64 gen(38);
  const auto sources = two_sources(gen, 16, 80);
  const Matrix V = 0.5 * (sources[0] + sources[1]).leftCols(40);
  TrainSpec spec;
  spec.d = {6};
  spec.tau_A = 0.1;
  spec.epochs = 50;
  spec.batch_size = 20;
  spec.seed = 1;
  const TrainState st = train_smu(make_train_data(sources, V, spec), spec);
  REQUIRE(st.history.size() == 51);
  for (double h : st.history) CHECK(std::isfinite(h));
  CHECK(st.history.back() <= st.history.front());
  // The true-data residual stays bounded by the data energy.
  for (int i = 0; i < 2; ++i) {
    const double res = kernels::squared_residual(sources[i], st.bases[i].entries, st.latents_true[i]);
    CHECK(res <= sources[i].squaredNorm());
  }
}

TEST_CASE("tau_S = 1 only computes supervised parts") {
  std::mt19937_64 gen(39);
  const auto comps = two_sources(gen, 8, 30);
  TrainSpec spec;
  spec.d = {3};
  spec.tau_S = 1.0;
  spec.tau_A = 0.5;
  spec.epochs = 4;
  spec.batch_size = 10;
  const TrainData data = make_train_data({}, Matrix(8, 0), spec, comps);
  const TrainState st = train_smu(data, spec);
  CHECK(st.counters.std_parts == 0);
  CHECK(st.counters.adv_parts == 0);
  CHECK(st.counters.sup_parts == 2 * 4 * 3);
}

TEST_CASE("D+ANMF computes every term, and gamma scales the supervised term") {
  std::mt19937_64 gen(40);
  const auto sources = two_sources(gen, 8, 30);
  const auto comps = two_sources(gen, 8, 20);
  TrainSpec spec;
  spec.d = {3};
  spec.tau_S = 0.5;
  spec.tau_A = 0.2;
  spec.epochs = 3;
  spec.batch_size = 10;
  const Matrix V = 0.5 * (sources[0] + sources[1]);
  const TrainData data = make_train_data(sources, V, spec, comps);
  const TrainState st = train_smu(data, spec);
  CHECK(st.counters.std_parts == 2 * 3 * 3);
  CHECK(st.counters.adv_parts == 2 * 3 * 3);
  CHECK(st.counters.sup_parts == 2 * 3 * 3);

  // After one epoch source 0 has only seen the shared latents fitted with the
  // initial bases; from the second epoch on the sources interact through them.
  TrainSpec one = spec;
  one.epochs = 1;
  TrainSpec weighted = one;
  weighted.gamma = {1.0, 3.0};
  const TrainState base1 = train_smu(data, one);
  const TrainState sg = train_smu(data, weighted);
  CHECK(oracle::bitwise_equal(sg.bases[0].entries, base1.bases[0].entries));
  CHECK_FALSE(oracle::bitwise_equal(sg.bases[1].entries, base1.bases[1].entries));
}

TEST_CASE("missing data for an active term is reported") {
  std::mt19937_64 gen(41);
  const auto sources = two_sources(gen, 6, 10);
  TrainSpec spec;
  spec.d = {2};
  spec.tau_A = 0.1;
  TrainData data;
  data.sources = sources;
  CHECK_THROWS_WITH_AS(train_smu(data, spec), doctest::Contains("adversarial"), Error);

  TrainSpec sup = spec;
  sup.tau_A = 0.0;
  sup.tau_S = 0.5;
  CHECK_THROWS_WITH_AS(train_smu(make_train_data(sources, Matrix(6, 0), sup), sup),
                       doctest::Contains("supervised"), Error);

  TrainSpec bad = spec;
  bad.tau_A = 0.0;
  TrainData neg;
  neg.sources = {-sources[0], sources[1]};
  CHECK_THROWS_AS(train_smu(neg, bad), Error);
}

TEST_CASE("oversized batches fall back to one full batch") {
  std::mt19937_64 gen(42);
  const Matrix U = oracle::random_matrix(5, 12, gen);
  TrainSpec spec;
  spec.d = {2};
  spec.epochs = 3;
  spec.batch_size = 500;
  const TrainState st = train_smu(make_train_data({U}, Matrix(5, 0), spec), spec);
  CHECK(st.counters.std_parts == 3);
}

TEST_CASE("objective matches scalar loops") {
  std::mt19937_64 gen(43);
  const auto sources = two_sources(gen, 5, 12);
  const auto comps = two_sources(gen, 5, 7);
  TrainSpec spec;
  spec.d = {2};
  spec.tau_A = 0.3;
  spec.tau_S = 0.4;
  spec.gamma = {1.0, 2.0};
  spec.sparsity.mu_W = 0.05;
  spec.epochs = 2;
  spec.batch_size = 4;
  const Matrix V = 0.5 * (sources[0] + sources[1]).leftCols(6);
  const TrainData data = make_train_data(sources, V, spec, comps);
  const TrainState st = train_smu(data, spec);
  const Objective obj = objective(st, data, spec);

  auto sq = [](const Matrix& U, const Matrix& W, const Matrix& H) {
    double s = 0.0;
    for (Index i = 0; i < U.rows(); ++i)
      for (Index j = 0; j < U.cols(); ++j) {
        double r = U(i, j);
        for (Index k = 0; k < W.cols(); ++k) r -= W(i, k) * H(k, j);
        s += r * r;
      }
    return s;
  };
  double weighted = 0.0;
  for (int i = 0; i < 2; ++i) {
    const Matrix& W = st.bases[i].entries;
    double l1 = 0.0;
    for (Index k = 0; k < W.size(); ++k) l1 += std::abs(W.data()[k]);
    const Matrix Hs = st.latents_sup.middleRows(2 * i, 2);
    const double f = 0.6 * sq(sources[i], W, st.latents_true[i]) / 12.0 -
                     0.6 * 0.3 * sq(data.adversarial[i].matrix, W, st.latents_adv[i]) /
                         static_cast<double>(data.adversarial[i].cols()) +
                     0.4 * sq(comps[i], W, Hs) / 7.0 + 0.05 * l1;
    CHECK(obj.per_source[i] == doctest::Approx(f).epsilon(1e-10));
    weighted += spec.gamma[i] * f;
  }
  CHECK(obj.weighted == doctest::Approx(weighted).epsilon(1e-10));
}

TEST_CASE("perfect factorization has zero objective") {
  std::mt19937_64 gen(44);
  const Matrix W = oracle::random_matrix(6, 2, gen);
  const Matrix H = oracle::random_matrix(2, 8, gen);
  TrainSpec spec;
  spec.d = {2};
  spec.sparsity = tiny_sparsity();
  TrainData data;
  data.sources = {W * H};
  TrainState st;
  st.bases = {Basis{W, 0}};
  st.latents_true = {H};
  st.latents_adv = {Matrix(2, 0)};
  CHECK(std::abs(objective(st, data, spec).per_source[0]) < 1e-28);
}

TEST_CASE("semi-supervised with one source is plain NMF") {
  std::mt19937_64 gen(45);
  const Matrix V = oracle::random_matrix(9, 30, gen);
  TrainSpec spec;
  spec.d = {3};
  spec.epochs = 10;
  spec.batch_size = 7;
  spec.seed = 21;
  const SemiResult semi = train_semisupervised(V, {}, spec);
  const TrainState st = train_smu(make_train_data({V}, Matrix(9, 0), spec), spec);
  CHECK(oracle::bitwise_equal(semi.basis.entries, st.bases[0].entries));
  CHECK(oracle::bitwise_equal(semi.latents, st.latents_true[0]));
  CHECK(semi.history == st.history);

  TrainSpec none = spec;
  none.epochs = 0;
  CHECK(oracle::bitwise_equal(train_semisupervised(V, {}, none).basis.entries,
                              init_exemplar(V, 3, init_seed(21, 0)).entries));
}

TEST_CASE("semi-supervised leaves little to the new basis when the old ones explain V") {
  // Block-structured parts: each column of V is one scaled part of W1, so a
  // dense extra component only adds error.
  std::mt19937_64 gen(46);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Matrix W1 = Matrix::Zero(20, 4);
  Matrix H1 = Matrix::Zero(4, 60);
  for (Index k = 0; k < 4; ++k)
    for (Index r = 0; r < 5; ++r) W1(5 * k + r, k) = unif(gen);
  for (Index j = 0; j < 60; ++j) H1(j % 4, j) = unif(gen);
  const Matrix V = W1 * H1;
  const std::vector<Basis> pre{Basis{W1, 0}};
  TrainSpec spec;
  spec.d = {4};
  spec.init = InitMode::random;
  spec.epochs = 200;
  spec.batch_size = 60;
  spec.sparsity = tiny_sparsity();
  const SemiResult r = train_semisupervised(V, pre, spec);
  const Matrix WSHS = r.basis.entries * r.latents.bottomRows(4);
  CHECK(WSHS.norm() <= 0.05 * V.norm());
  CHECK(r.basis.source_id == 1);
}
