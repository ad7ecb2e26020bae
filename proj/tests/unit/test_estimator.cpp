#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "rhoindex/estimator.hpp"

using namespace rhoindex;

namespace {

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rhoindex::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("off-diagonal extraction") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(extract_offdiagonals(a, ExtractionMode::AllPairs).values == std::vector<double>{2, 3});

  const auto id = extract_offdiagonals(Matrix::Identity(3, 3), ExtractionMode::AllPairs);
  CHECK(id.count() == 6);
  CHECK(std::all_of(id.values.begin(), id.values.end(), [](double v) { return v == 0.0; }));

  Matrix b(3, 3);
  b << 0, 1, 2, 3, 0, 4, 5, 6, 0;
  CHECK(extract_offdiagonals(b, ExtractionMode::UpperTriangle).values == std::vector<double>{1, 2, 4});
  CHECK(extract_offdiagonals(b, ExtractionMode::AllPairs).values == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("coupling matrix validation") {
  CHECK(code_of([] { extract_offdiagonals(Matrix(2, 3), ExtractionMode::AllPairs); }) == ErrorCode::NonSquare);
  CHECK(code_of([] { extract_offdiagonals(Matrix::Ones(1, 1), ExtractionMode::AllPairs); }) == ErrorCode::DimTooSmall);
  Matrix nan = Matrix::Zero(3, 3);
  nan(0, 2) = std::nan("");
  CHECK(code_of([&] { extract_offdiagonals(nan, ExtractionMode::AllPairs); }) == ErrorCode::NonFiniteEntry);
}

TEST_CASE("robust standardization") {
  const ZSample s = robust_standardize(std::vector<double>{-1, 0, 1});
  REQUIRE(s.z.size() == 3);
  CHECK(s.z[0] == doctest::Approx(-0.67449).epsilon(1e-5));
  CHECK(s.z[1] == 0.0);
  CHECK(s.z[2] == doctest::Approx(0.67449).epsilon(1e-5));
  CHECK(s.center == 0.0);
  CHECK(s.scale == doctest::Approx(1.4826));
  CHECK(s.source == ZSource::WeightMad);

  CHECK(code_of([] { robust_standardize(std::vector<double>{5, 5, 5}); }) == ErrorCode::DegenerateSpread);
  CHECK(code_of([] { robust_standardize(std::vector<double>{5}); }) == ErrorCode::TooFewValues);

  const std::vector<double> x = normal_draws(101, 3);
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return 2.5 * v - 7.0; });
  const ZSample zx = robust_standardize(x), zy = robust_standardize(y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(zy.z[i] == doctest::Approx(zx.z[i]).epsilon(1e-12));
}

TEST_CASE("fisher transform") {
  CHECK(fisher_z(0.0, 50) == 0.0);
  CHECK(fisher_z(0.5, 103) == doctest::Approx(5.493061443340548457).epsilon(1e-14));
  CHECK(fisher_z(-0.3, 40) == -fisher_z(0.3, 40));
  CHECK(code_of([] { fisher_z(1.0, 10); }) == ErrorCode::CorrelationOutOfRange);
  CHECK(code_of([] { fisher_z(-1.5, 10); }) == ErrorCode::CorrelationOutOfRange);
  CHECK(code_of([] { fisher_z(0.1, 3); }) == ErrorCode::TooFewObservations);
}

TEST_CASE("activations path") {
  Matrix dup = gaussian_matrix(50, 4, 11);
  dup.col(2) = dup.col(0);
  CHECK(code_of([&] { zsample_from_activations(dup); }) == ErrorCode::CorrelationOutOfRange);

  const ZSample two = zsample_from_activations(gaussian_matrix(20, 2, 12));
  CHECK(two.z.size() == 1);
  CHECK(two.source == ZSource::FisherActivations);
  CHECK(two.n_obs == 20u);

  Matrix flat = gaussian_matrix(20, 3, 13);
  flat.col(1).setConstant(4.0);
  CHECK(code_of([&] { zsample_from_activations(flat); }) == ErrorCode::ZeroVarianceColumn);
  CHECK(code_of([] { zsample_from_activations(gaussian_matrix(3, 4, 1)); }) == ErrorCode::TooFewObservations);

  // Stacking the rows twice keeps r and rescales z by the Fisher factor.
  const Matrix a = gaussian_matrix(30, 5, 14);
  Matrix stacked(60, 5);
  stacked << a, a;
  const ZSample za = zsample_from_activations(a), zs = zsample_from_activations(stacked);
  const double factor = std::sqrt((60.0 - 3.0) / (30.0 - 3.0));
  for (std::size_t k = 0; k < za.z.size(); ++k) CHECK(zs.z[k] == doctest::Approx(za.z[k] * factor).epsilon(1e-11));

  // Correlations against a textbook oracle.
  const Matrix r = correlation_matrix(a);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      std::vector<double> ci(a.col(i).data(), a.col(i).data() + 30), cj(a.col(j).data(), a.col(j).data() + 30);
      CHECK(r(i, j) == doctest::Approx(oracle::pearson(ci, cj)).epsilon(1e-13));
    }
  }
}

TEST_CASE("closed-form normal terms") {
  CHECK(gaussian_self_constant() == doctest::Approx(1.1283791670955125739).epsilon(1e-15));
  CHECK(mixed_expectation(0.0) == doctest::Approx(0.79788456080286535588).epsilon(1e-15));
  CHECK(mixed_expectation(0.0) == doctest::Approx(gaussian_self_constant() / std::sqrt(2.0)).epsilon(1e-15));

  // Frozen high-precision values.
  const std::pair<double, double> frozen[] = {
      {0.5, 0.89559311480261205919}, {1.0, 1.1666309411753725968}, {1.5, 1.5586135875252092572},
      {2.0, 2.0169814052336592751},  {3.0, 3.0007643086340954472}, {4.25, 4.2500045848039954673},
      {6.0, 6.0000000003127139592},  {8.0, 8.000000000000000151},  {-2.5, 2.5040082743582563989},
  };
  for (const auto& [x, value] : frozen) CHECK(mixed_expectation(x) == doctest::Approx(value).epsilon(1e-13));

  CHECK_THROWS_AS(mixed_expectation(std::nan("")), Error);
  CHECK(code_of([] { mixed_expectation(INFINITY); }) == ErrorCode::NonFiniteInput);
}

TEST_CASE("mixed expectation accuracy over |x| <= 8") {
  double worst = 0.0;
  for (int i = -1600; i <= 1600; ++i) {
    const double x = i * 0.005;
    const long double ref = oracle::mixed_expectation(x);
    worst = std::max(worst, static_cast<double>(std::fabs((mixed_expectation(x) - ref) / ref)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("mixed expectation shape") {
  const double floor = std::sqrt(2.0 / 3.141592653589793);
  for (double x = 0.01; x < 30; x *= 1.3) {
    CHECK(mixed_expectation(x) > floor);
    CHECK(mixed_expectation(-x) == mixed_expectation(x));
  }
  CHECK(mixed_expectation(40.0) / 40.0 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("self term") {
  CHECK(empirical_self_term(std::vector<double>{2.5, 2.5}) == 0.0);
  CHECK(empirical_self_term(std::vector<double>{0, 1}) == 1.0);
  CHECK(empirical_self_term(std::vector<double>{1, 2, 4}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(code_of([] { empirical_self_term(std::vector<double>{1}); }) == ErrorCode::TooFewValues);

  const std::vector<double> z = normal_draws(200, 21);
  const double base = empirical_self_term(z);
  std::vector<double> shifted = z, scaled = z;
  for (double& v : shifted) v += 13.0;
  for (double& v : scaled) v *= -3.0;
  CHECK(empirical_self_term(shifted) == doctest::Approx(base).epsilon(1e-12));
  CHECK(empirical_self_term(scaled) == doctest::Approx(3.0 * base).epsilon(1e-12));
  CHECK(empirical_self_term(z) == doctest::Approx(oracle::self_term_pairwise(z)).epsilon(1e-12));
  CHECK(empirical_self_term_bruteforce(z) == doctest::Approx(oracle::self_term_pairwise(z)).epsilon(1e-12));
}

TEST_CASE("energy distance on the two-point sample") {
  const RhoEstimate e = energy_distance(std::vector<double>{-1, 1});
  CHECK(e.mixed_term == doctest::Approx(2.3332618823507451935).epsilon(1e-14));
  CHECK(e.self_term == 2.0);
  // High-precision value of the definition; the spec's printed example
  // (-0.7951172518) rounds a slightly different value.
  CHECK(e.rho_hat == doctest::Approx(-0.79511728474476738036).epsilon(1e-13));
  CHECK(e.rho_hat_plus == 0.0);
  CHECK(e.m == 2);
  CHECK(e.gaussian_constant == gaussian_self_constant());
}

TEST_CASE("energy distance invariants") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> z = normal_draws(2 + rep * 7, 100 + rep);
    if (rep % 3 == 0)
      for (double& v : z) v = v * v - 1.0;
    const RhoEstimate e = energy_distance(z);
    CHECK(e.rho_hat == doctest::Approx(e.mixed_term - e.self_term - e.gaussian_constant).epsilon(1e-14));
    CHECK(e.rho_hat_plus == std::max(0.0, e.rho_hat));
    CHECK(e.self_term >= 0.0);

    std::shuffle(z.begin(), z.end(), rng);
    CHECK(energy_distance(z) == e);  // bit-identical after a shuffle
    for (double& v : z) v = -v;
    CHECK(energy_distance(z).rho_hat == doctest::Approx(e.rho_hat).epsilon(1e-13));
  }
}

TEST_CASE("weights pipeline") {
  CHECK(code_of([] { rho_from_weights(Matrix::Identity(4, 4)); }) == ErrorCode::DegenerateSpread);

  const Matrix c = gaussian_matrix(96, 96, 77);
  const RhoEstimate base = rho_from_weights(c);
  CHECK(base.m == 96u * 95u);
  CHECK(base.rho_hat_plus < 0.02);
  CHECK(rho_from_weights(c, ExtractionMode::UpperTriangle).m == 96u * 95u / 2u);

  for (double s : {0.01, 3.0, -1.0, -250.0}) {
    const Matrix scaled = s * c;
    CHECK(rho_from_weights(scaled).rho_hat == doctest::Approx(base.rho_hat).epsilon(1e-10));
  }
}

TEST_CASE("activations pipeline on independent columns") {
  const RhoEstimate e = rho_from_activations(gaussian_matrix(2000, 40, 31));
  CHECK(e.m == 40u * 39u / 2u);
  CHECK(std::isfinite(e.rho_hat));
  CHECK(std::fabs(e.rho_hat) < 0.05);
}

}
