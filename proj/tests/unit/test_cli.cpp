#include "anmf/cli.hpp"

#include "anmf/experiment.hpp"
#include "anmf/io.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace anmf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "anmf");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void write_json(const fs::path& p, const Json& j) {
  std::ofstream out(p);
  out << j.dump(2);
}

// Two sources living on different halves of the rows, plus some overlap.
void write_sources(const fs::path& dir, Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Matrix a = oracle::random_matrix(10, n, gen, 0.0, 1.0);
  Matrix b = oracle::random_matrix(10, n, gen, 0.0, 1.0);
  a.bottomRows(4) *= 0.05;
  b.topRows(4) *= 0.05;
  save_matrix(dir / "a.anmf", a);
  save_matrix(dir / "b.anmf", b);
}

}  // namespace

TEST_CASE("mix, train and separate end to end") {
  const auto dir = oracle::temp_dir("cli_e2e");
  write_sources(dir, 60, 1);
  fs::create_directories(dir / "test");
  {
    std::mt19937_64 gen(2);
    Matrix a = oracle::random_matrix(10, 8, gen);
    Matrix b = oracle::random_matrix(10, 8, gen);
    a.bottomRows(4) *= 0.05;
    b.topRows(4) *= 0.05;
    save_matrix(dir / "test" / "a.anmf", a);
    save_matrix(dir / "test" / "b.anmf", b);
  }

  Run r = cli({"mix", "--sources", (dir / "a.anmf").string(), (dir / "b.anmf").string(), "--out",
               (dir / "mixed").string(), "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "mixed" / "mix.anmf"));
  CHECK(load_matrix(dir / "mixed" / "truth_1.anmf").cols() == 60);

  r = cli({"mix", "--sources", (dir / "test" / "a.anmf").string(), (dir / "test" / "b.anmf").string(),
           "--out", (dir / "testmix").string()});
  REQUIRE(r.code == 0);

  write_json(dir / "exp.json", {{"method", "anmf"},
                                {"sources", {"a.anmf", "b.anmf"}},
                                {"mixes", "mixed/mix.anmf"},
                                {"train", {{"d", 3}, {"epochs", 15}, {"batch_size", 20}}}});
  r = cli({"train", "--config", (dir / "exp.json").string(), "--out", (dir / "model").string(), "--seed", "5"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out).at("sources") == 2);
  const ModelBundle bundle = load_bundle(dir / "model");
  CHECK(bundle.spec.seed == 5);
  CHECK(bundle.history.size() == 16);

  const std::vector<std::string> sep{"separate",
                                     "--model",
                                     (dir / "model").string(),
                                     "--mix",
                                     (dir / "testmix" / "mix.anmf").string(),
                                     "--out",
                                     (dir / "est").string(),
                                     "--references",
                                     (dir / "testmix" / "truth_0.anmf").string(),
                                     (dir / "testmix" / "truth_1.anmf").string()};
  r = cli(sep);
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 1 + 8 * 2 + 2 * 2);
  CHECK(rows[0] == "sample_index,source,metric,value");
  for (std::size_t k = 1; k <= 16; ++k) CHECK(rows[k].find(",psnr,") != std::string::npos);
  CHECK(rows[17].rfind("median,0,psnr,", 0) == 0);
  CHECK(slurp(dir / "est" / "metrics.csv") == r.out);

  // Same inputs and seed: identical bytes.
  const std::string first = slurp(dir / "est" / "source_0.anmf");
  const Run again = cli(sep);
  CHECK(again.out == r.out);
  CHECK(slurp(dir / "est" / "source_0.anmf") == first);
  cli({"train", "--config", (dir / "exp.json").string(), "--out", (dir / "model2").string(), "--seed", "5"});
  CHECK(slurp(dir / "model2" / "basis_1.anmf") == slurp(dir / "model" / "basis_1.anmf"));
  CHECK(slurp(dir / "model2" / "manifest.json") == slurp(dir / "model" / "manifest.json"));
}

TEST_CASE("train with zero epochs returns the initialization") {
  const auto dir = oracle::temp_dir("cli_zero");
  write_sources(dir, 20, 4);
  write_json(dir / "exp.json", {{"method", "nmf"},
                                {"sources", {"a.anmf", "b.anmf"}},
                                {"train", {{"d", 4}, {"epochs", 0}, {"seed", 9}}}});
  REQUIRE(cli({"train", "--config", (dir / "exp.json").string(), "--out", (dir / "m").string()}).code == 0);
  const ModelBundle b = load_bundle(dir / "m");
  const Matrix a = load_matrix(dir / "a.anmf");
  CHECK(b.history.size() == 1);
  CHECK(oracle::bitwise_equal(b.bases[0].entries, init_exemplar(a, 4, init_seed(9, 0)).entries));
}

TEST_CASE("eval of perfect estimates reports the cap") {
  const auto dir = oracle::temp_dir("cli_eval");
  write_sources(dir, 5, 6);
  const Run r = cli({"eval", "--estimates", (dir / "a.anmf").string(), (dir / "b.anmf").string(),
                     "--references", (dir / "a.anmf").string(), (dir / "b.anmf").string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  CHECK(rows[1] == "0,0,psnr,100");
  CHECK(rows[11] == "median,0,psnr,100");
  CHECK(rows[12] == "median_se,0,psnr,0");
}

TEST_CASE("features round trip and denoise on WAV files") {
  const auto dir = oracle::temp_dir("cli_audio");
  Audio tone;
  Audio hiss;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 8000; ++t) {
    tone.samples.push_back(0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * t / 16000.0));
    hiss.samples.push_back(u(gen));
  }
  save_wav(dir / "tone.wav", tone);
  save_wav(dir / "hiss.wav", hiss);

  Run r = cli({"features", "--input", (dir / "tone.wav").string(), "--output", (dir / "mag.anmf").string(),
               "--phase", (dir / "phase.anmf").string()});
  REQUIRE(r.code == 0);
  CHECK(load_matrix(dir / "mag.anmf").rows() == 257);
  r = cli({"features", "--inverse", "--input", (dir / "mag.anmf").string(), "--phase",
           (dir / "phase.anmf").string(), "--output", (dir / "back.wav").string(), "--length", "8000"});
  REQUIRE(r.code == 0);
  const Audio back = load_wav(dir / "back.wav");
  const Audio orig = load_wav(dir / "tone.wav");
  REQUIRE(back.samples.size() == orig.samples.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < back.samples.size(); ++t)
    worst = std::max(worst, std::abs(back.samples[t] - orig.samples[t]));
  CHECK(worst <= 1.0 / 32768.0);

  r = cli({"mix", "--sources", (dir / "tone.wav").string(), (dir / "hiss.wav").string(), "--snr-db", "0",
           "--out", (dir / "mixed").string()});
  REQUIRE(r.code == 0);
  r = cli({"features", "--input", (dir / "hiss.wav").string(), "--output", (dir / "hiss.anmf").string()});
  REQUIRE(r.code == 0);
  write_json(dir / "exp.json", {{"method", "nmf"},
                                {"sources", {"mag.anmf", "hiss.anmf"}},
                                {"train", {{"d", 4}, {"epochs", 20}}}});
  REQUIRE(cli({"train", "--config", (dir / "exp.json").string(), "--out", (dir / "model").string()}).code == 0);
  for (const std::string mode : {"projection", "wiener"}) {
    r = cli({"denoise", "--model", (dir / "model").string(), "--input", (dir / "mixed" / "mix.wav").string(),
             "--output", (dir / ("out_" + mode + ".wav")).string(), "--reference",
             (dir / "mixed" / "source_0.wav").string(), "--mode", mode});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 3);
    const double in_score = std::stod(rows[1].substr(rows[1].rfind(',') + 1));
    const double out_score = std::stod(rows[2].substr(rows[2].rfind(',') + 1));
    CHECK(out_score > in_score);
  }
}

TEST_CASE("tune writes the trials and the best model") {
  const auto dir = oracle::temp_dir("cli_tune");
  write_sources(dir, 30, 8);
  save_matrix(dir / "v.anmf", Matrix(0.5 * (load_matrix(dir / "a.anmf") + load_matrix(dir / "b.anmf"))));
  write_json(dir / "exp.json",
             {{"method", "danmf"},
              {"sources", {"a.anmf", "b.anmf"}},
              {"mixes", "v.anmf"},
              {"supervised", {{"components", {"a.anmf", "b.anmf"}}, {"mixes", "v.anmf"}}},
              {"train", {{"d", 2}, {"epochs", 5}, {"batch_size", 10}}},
              {"tuning", {{"trials", 3}, {"folds", 3}, {"space", {{"tau_S", {{"choice", {0.0, 0.5}}}}}}}}});
  const Run r = cli({"tune", "--config", (dir / "exp.json").string(), "--out", (dir / "t").string()});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(slurp(dir / "t" / "tune.json"));
  CHECK(j.at("trials").size() == 3);
  CHECK(fs::exists(dir / "t" / "best" / "manifest.json"));
  for (const auto& t : j.at("trials"))
    CHECK(t.at("fold_scores").size() == (t.at("spec").at("tau_S").get<double>() > 0.0 ? 3u : 1u));
}

TEST_CASE("bad invocations fail with a message") {
  Run r = cli({"train", "--bogus"});
  CHECK(r.code != 0);
  CHECK_FALSE(r.err.empty());
  r = cli({});
  CHECK(r.code != 0);
  r = cli({"separate", "--model", "/nonexistent/m", "--mix", "/nonexistent/v", "--out", "/tmp/x"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: ", 0) == 0);
  r = cli({"train", "--out", "/tmp/anmf_never"});
  CHECK(r.code != 0);

  const auto dir = oracle::temp_dir("cli_neg");
  Matrix neg = Matrix::Ones(3, 4);
  neg(1, 1) = -1.0;
  save_matrix(dir / "n.anmf", neg);
  save_matrix(dir / "p.anmf", Matrix::Ones(3, 4));
  r = cli({"mix", "--sources", (dir / "n.anmf").string(), (dir / "p.anmf").string(), "--out", (dir / "o").string()});
  CHECK(r.code != 0);
  r = cli({"--clamp-negatives", "mix", "--sources", (dir / "n.anmf").string(), (dir / "p.anmf").string(), "--out",
           (dir / "o").string()});
  CHECK(r.code == 0);
  CHECK(load_matrix(dir / "o" / "mix.anmf")(1, 1) == 0.5);
}
