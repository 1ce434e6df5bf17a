#include "anmf/tuning.hpp"

#include "anmf/kernels.hpp"
#include "anmf/separator.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace anmf;

namespace {

SearchSpace small_space() {
  SearchSpace s;
  s.params["mu_H"] = LogUniform{1e-6, 1e-2};
  s.params["tau_S"] = Choice{{0.0, 0.5}};
  s.params["d"] = Choice{{2.0, 3.0, 5.0}};
  return s;
}

}  // namespace

TEST_CASE("search space validation and sampling") {
  SearchSpace bad;
  bad.params["mu_H"] = Uniform{1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.params["mu_H"] = LogUniform{0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.params["mu_H"] = Choice{};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.params.clear();
  bad.params["learning_rate"] = Uniform{0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), Error);

  SearchSpace s;
  s.params["mu_W"] = LogUniform{1e-4, 1e-1};
  s.params["tau_A"] = Uniform{0.0, 0.5};
  s.params["epochs"] = Uniform{10.0, 20.0};
  s.params["init"] = Choice{{0.0, 1.0}};
  TrainSpec base;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const TrainSpec t = s.sample(base, rng);
    CHECK(t.sparsity.mu_W >= 1e-4);
    CHECK(t.sparsity.mu_W <= 1e-1);
    CHECK(t.tau_A >= 0.0);
    CHECK(t.tau_A <= 0.5);
    CHECK(t.epochs >= 10);
    CHECK(t.epochs <= 20);
  }
}

TEST_CASE("random_search bookkeeping") {
  std::atomic<int> calls{0};
  const TrialObjective obj = [&](const TrainSpec& spec, const Fold& fold) {
    ++calls;
    return spec.sparsity.mu_H * 1e3 + static_cast<double>(fold.validation.front());
  };
  SearchOptions opt;
  opt.trials = 12;
  opt.folds = 4;
  opt.seed = 9;
  opt.n_supervised = 20;
  const TuneResult r = random_search(small_space(), TrainSpec{}, obj, opt);
  int expected_calls = 0;
  for (const auto& t : r.trials) {
    const std::size_t k = uses_strong_supervision(t.spec) ? 4 : 1;
    CHECK(t.fold_scores.size() == k);
    expected_calls += static_cast<int>(k);
    double sum = 0.0;
    for (double s : t.fold_scores) sum += s;
    CHECK(std::abs(t.mean_score - sum / static_cast<double>(k)) <= 1e-12);
    CHECK(r.trials[r.best].mean_score >= t.mean_score);
  }
  CHECK(calls == expected_calls);
  for (std::size_t t = 0; t < r.best; ++t) CHECK(r.trials[t].mean_score < r.trials[r.best].mean_score);

  const TuneResult again = random_search(small_space(), TrainSpec{}, obj, opt);
  CHECK(again.best == r.best);
  for (std::size_t t = 0; t < r.trials.size(); ++t) {
    CHECK(again.trials[t].fold_scores == r.trials[t].fold_scores);
    CHECK(again.trials[t].spec.d == r.trials[t].spec.d);
  }

  opt.trials = 1;
  CHECK(random_search(small_space(), TrainSpec{}, obj, opt).best == 0);
}

TEST_CASE("a throwing trial scores -inf and the search continues") {
  SearchSpace s;
  s.params["d"] = Choice{{1.0, 2.0}};
  const TrialObjective obj = [](const TrainSpec& spec, const Fold&) -> double {
    if (spec.d.front() == 1) throw Error("boom");
    return 1.0;
  };
  SearchOptions opt;
  opt.trials = 10;
  opt.n_supervised = 5;
  const TuneResult r = random_search(s, TrainSpec{}, obj, opt);
  bool saw_failure = false;
  for (const auto& t : r.trials)
    if (t.spec.d.front() == 1) {
      CHECK(t.mean_score == -std::numeric_limits<double>::infinity());
      saw_failure = true;
    }
  CHECK(saw_failure);
  CHECK(r.trials[r.best].mean_score == 1.0);
}

TEST_CASE("random_search finds the latent dimension that fits the data") {
  std::mt19937_64 gen(80);
  const Matrix data = oracle::random_matrix(15, 4, gen, 0.0, 1.0) * oracle::random_matrix(4, 40, gen);
  TrainSpec base;
  base.epochs = 60;
  base.batch_size = 40;
  base.init = InitMode::random;
  SearchSpace s;
  s.params["d"] = Choice{{1.0, 2.0, 4.0}};
  const TrialObjective obj = [&](const TrainSpec& spec, const Fold& fold) {
    const Matrix train = kernels::gather_columns(data, fold.train);
    const TrainState st = train_smu(make_train_data({train}, Matrix(15, 0), spec), spec);
    const Matrix val = kernels::gather_columns(data, fold.validation);
    const auto r = separate(val, st.bases, spec.sparsity, spec.test_solver);
    return -r.residual.norm() / val.norm();
  };
  SearchOptions opt;
  opt.trials = 15;
  opt.seed = 4;
  opt.n_supervised = 40;
  const TuneResult r = random_search(s, base, obj, opt);
  CHECK(r.trials[r.best].spec.d.front() == 4);
}
