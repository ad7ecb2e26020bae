#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "rhoindex/sweep.hpp"

using namespace rhoindex;

TEST_SUITE("sweep") {

TEST_CASE("space parsing") {
  const SweepSpace s = parse_sweep_space(
      "# reduced space\n"
      "learning_rate = loguniform 1e-3 1.0\n"
      "batch_size = choice 20 100   # two options\n"
      "\n"
      "hidden = int 16 128 16\n"
      "epochs = fixed 30\n");
  REQUIRE(s.params.size() == 4);
  CHECK(s.params.at("learning_rate").kind == ParamRange::Kind::LogUniform);
  CHECK(s.params.at("learning_rate").hi == 1.0);
  CHECK(s.params.at("batch_size").choices == std::vector<std::string>{"20", "100"});
  CHECK(s.params.at("hidden").step == 16);
  CHECK(s.params.at("epochs").choices == std::vector<std::string>{"30"});

  CHECK_THROWS_AS(parse_sweep_space("warmup = fixed 3\n"), Error);
  CHECK_THROWS_AS(parse_sweep_space("learning_rate = loguniform -1 1\n"), Error);
  CHECK_THROWS_AS(parse_sweep_space("learning_rate loguniform 1e-3 1\n"), Error);
  CHECK_THROWS_AS(parse_sweep_space("batch_size = choice\n"), Error);
  CHECK_THROWS_AS(parse_sweep_space("hidden = int 10 5\n"), Error);
  CHECK_THROWS_AS(parse_sweep_space("epochs = normal 3\n"), Error);
}

TEST_CASE("sampled configs stay inside the space") {
  const SweepSpace s = default_sweep_space();
  ProbeConfig base;
  for (std::size_t t = 0; t < 200; ++t) {
    const ProbeConfig c = sample_config(s, base, 7, t);
    CHECK_NOTHROW(validate(c));
    CHECK(c.learning_rate >= 1e-3);
    CHECK(c.learning_rate <= 1.0);
    CHECK((c.batch_size == 20 || c.batch_size == 100));
    REQUIRE(c.hidden_dims.size() == 1);
    CHECK(c.hidden_dims[0] % 16 == 0);
    CHECK(c.hidden_dims[0] >= 16);
    CHECK(c.hidden_dims[0] <= 128);
    CHECK((c.l2 == 0.0 || (c.l2 >= 1e-8 && c.l2 <= 1e-2)));
  }
  CHECK(config_digest(sample_config(s, base, 7, 3)) == config_digest(sample_config(s, base, 7, 3)));
  CHECK(config_digest(sample_config(s, base, 7, 3)) != config_digest(sample_config(s, base, 8, 3)));
}

TEST_CASE("one trial reproduces a direct train call") {
  const Dataset data = make_blobs(8, 2, 32, 2.0, 1);
  SweepSpace s = parse_sweep_space("learning_rate = loguniform 1e-2 1e-1\nepochs = fixed 3\nhidden = int 16 32 8\n");
  ProbeConfig base;
  const std::vector<SweepRow> rows = sweep(s, base, data, 1, 11);
  REQUIRE(rows.size() == 1);
  const ProbeConfig c = sample_config(s, base, 11, 0);
  CHECK(rows[0].digest == config_digest(c));
  const TrainingTrace t = train(c, data);
  CHECK(rows[0].metric == t.epochs.back().metric);
  CHECK(rows[0].rho_mean == t.epochs.back().rho_mean);
  REQUIRE(rows[0].layer_rho.size() == 1);
  CHECK(rows[0].layer_rho[0] == t.epochs.back().layers[0].rho_weight);
}

TEST_CASE("sweep emits one row per trial and flags failures") {
  const Dataset data = make_blobs(8, 2, 32, 2.0, 2);
  ProbeConfig base;
  base.task = Task::Autoencode;
  base.output_dim = 8;
  // Learning rates this large blow up the autoencoder on some trials.
  const SweepSpace s = parse_sweep_space("learning_rate = loguniform 1e-2 200\nepochs = fixed 5\nhidden = fixed 16\n");
  const std::vector<SweepRow> rows = sweep(s, base, data, 6, 3);
  REQUIRE(rows.size() == 6);
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].trial == i);
    if (!rows[i].error_flag.empty()) {
      ++flagged;
      CHECK(rows[i].error_flag.find("DivergedLoss") != std::string::npos);
    }
  }
  CHECK(flagged >= 1);
  CHECK(flagged < rows.size());
}

TEST_CASE("spearman against a rank oracle") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> level(0, 6);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = level(rng);
      y[i] = level(rng) + 0.5 * x[i];
    }
    const double expected = oracle::pearson(oracle::average_ranks(x), oracle::average_ranks(y));
    CHECK(spearman(x, y) == doctest::Approx(expected).epsilon(1e-12));
  }
  const std::vector<double> a = {1, 2, 3, 4}, b = {10, 20, 30, 40};
  CHECK(spearman(a, b) == doctest::Approx(1.0));
  const std::vector<double> c = {4, 3, 2, 1};
  CHECK(spearman(a, c) == doctest::Approx(-1.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> with_nan = {1, nan, 3, 4}, other = {2, 100, 6, 8};
  CHECK(spearman(with_nan, other) == doctest::Approx(1.0));
  CHECK(std::isnan(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3})));
}

}
