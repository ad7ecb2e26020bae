#include <cmath>
#include <random>

#include "doctest.h"

#include "rhoindex/dimension_study.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/numeric.hpp"

using namespace rhoindex;

TEST_SUITE("dimension_study") {

TEST_CASE("default ladder") {
  CHECK(DimScanConfig{}.dims == std::vector<std::size_t>{16, 24, 32, 48, 64, 96, 128, 192});
}

TEST_CASE("config validation") {
  DimScanConfig c;
  c.dims = {3, 8};
  CHECK_THROWS_AS(validate(c), Error);
  c.dims = {8};
  c.trials = 1;
  CHECK_THROWS_AS(validate(c), Error);
  c.trials = 2;
  CHECK_NOTHROW(validate(c));
  c.dims = {};
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("off-diagonal budgets") {
  CHECK(off_diagonal_count(16, false) == 240);
  CHECK(off_diagonal_count(16, true) == 120);
  CHECK(pooled_matrix_count(192, 192, false) == 1);
  for (std::size_t n : kDefaultDims) {
    for (bool sym : {false, true}) {
      const std::size_t k = pooled_matrix_count(n, 192, sym);
      const std::size_t total = k * off_diagonal_count(n, sym);
      const std::size_t target = off_diagonal_count(192, sym);
      CHECK(total >= target);
      CHECK(total < target + off_diagonal_count(n, sym));
    }
  }
}

TEST_CASE("records carry the right m and are deterministic") {
  DimScanConfig c;
  c.dims = {8, 12};
  c.trials = 4;
  c.symmetry = Symmetry::Both;
  c.master_seed = 5;
  const std::vector<DimScanRecord> a = run_dimscan(c);
  REQUIRE(a.size() == 16);
  CHECK(a == run_dimscan(c));
  CHECK(a.front().symmetric);
  CHECK_FALSE(a.back().symmetric);
  for (const DimScanRecord& r : a) {
    CHECK(r.m_used == off_diagonal_count(r.n, r.symmetric));
    CHECK(r.error_flag.empty());
    CHECK(std::isfinite(r.rho_hat));
  }

  c.budget = BudgetMode::FixedTotal;
  for (const DimScanRecord& r : run_dimscan(c)) {
    CHECK(r.m_used == pooled_matrix_count(r.n, 12, r.symmetric) * off_diagonal_count(r.n, r.symmetric));
  }

  DimScanConfig other = c;
  other.master_seed = 6;
  CHECK(run_dimscan(other) != run_dimscan(c));
}

TEST_CASE("a trial is independent of the scan it runs in") {
  DimScanConfig wide;
  wide.dims = {8, 16, 32};
  wide.trials = 3;
  DimScanConfig single = wide;
  single.dims = {16};
  const DimScanRecord r = run_dimscan_trial(single, 16, 2, false);
  const std::vector<DimScanRecord> all = run_dimscan(wide);
  CHECK(all[5] == r);
}

TEST_CASE("trial matches a direct computation") {
  DimScanConfig c;
  c.dims = {10};
  c.trials = 2;
  c.master_seed = 123;
  const DimScanRecord r = run_dimscan_trial(c, 10, 1, false);

  Engine engine = make_engine(dimscan_trial_seed(123, 10, 1, false));
  std::normal_distribution<double> normal;
  Matrix g(10, 10);
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j) g(i, j) = normal(engine);
  CHECK(r.rho_hat == rho_from_weights(g).rho_hat);
}

TEST_CASE("summary statistics") {
  std::vector<DimScanRecord> same;
  for (std::size_t t = 0; t < 4; ++t) same.push_back({16, t, false, 0.25, 240, ""});
  const std::vector<DimScanSummary> s = summarize_dimscan(same);
  REQUIRE(s.size() == 1);
  CHECK(s[0].count == 4);
  CHECK(s[0].stddev == 0.0);
  CHECK(s[0].mean == 0.25);
  CHECK(s[0].q05 == 0.25);
  CHECK(s[0].q95 == 0.25);

  std::vector<DimScanRecord> mixed = {{8, 0, false, 1.0, 56, ""},
                                      {8, 1, false, 3.0, 56, ""},
                                      {8, 2, false, std::nan(""), 56, "DegenerateSpread"},
                                      {12, 0, false, 0.0, 132, ""}};
  CHECK_THROWS_AS(summarize_dimscan(mixed), Error);
  mixed.push_back({12, 1, false, 2.0, 132, ""});
  const std::vector<DimScanSummary> m = summarize_dimscan(mixed);
  REQUIRE(m.size() == 2);
  CHECK(m[0].n == 8);
  CHECK(m[0].count == 2);
  CHECK(m[0].mean == 2.0);
  CHECK(m[0].stddev == doctest::Approx(std::sqrt(2.0)));
  CHECK(m[0].q05 == doctest::Approx(1.1));

  DimScanConfig c;
  c.dims = {8, 12, 16};
  c.trials = 3;
  c.symmetry = Symmetry::Both;
  CHECK(summarize_dimscan(run_dimscan(c)).size() == 6);
}

TEST_CASE("slope and monotonicity diagnostics") {
  std::vector<DimScanSummary> s;
  for (std::size_t m : {100u, 400u, 1600u, 6400u}) {
    DimScanSummary row;
    row.m_used = m;
    row.n = m;
    row.stddev = 3.0 / std::sqrt(static_cast<double>(m));
    s.push_back(row);
  }
  CHECK(log_log_slope(s) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(check_std_nonincreasing(s).violations == 0);
  s[2].stddev = s[1].stddev * 1.1;
  const MonotoneCheck mc = check_std_nonincreasing(s);
  CHECK(mc.violations == 1);
  CHECK(mc.worst_relative_increase == doctest::Approx(0.1));
}

}
