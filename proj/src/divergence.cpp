#include "rhoindex/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rhoindex/error.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/numeric.hpp"

namespace rhoindex {

std::string_view to_string(DistributionKind kind) noexcept {
  switch (kind) {
    case DistributionKind::Gaussian: return "gaussian";
    case DistributionKind::StudentT3: return "student_t3";
    case DistributionKind::LaplaceUnitVar: return "laplace_unitvar";
    case DistributionKind::GaussianMixture: return "gaussian_mixture";
    case DistributionKind::SkewedExpMinus1: return "skewed_exp_minus_1";
  }
  return "unknown";
}

DistributionKind distribution_from_string(std::string_view name) {
  for (const DistributionKind kind : kAllDistributions) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::ParseError, "unknown distribution '" + std::string(name) + "'");
}

std::vector<double> sample(DistributionKind kind, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 2");
  Engine engine = make_engine(seed);
  std::vector<double> out(n);

  switch (kind) {
    case DistributionKind::Gaussian: {
      std::normal_distribution<double> normal;
      for (double& v : out) v = normal(engine);
      break;
    }
    case DistributionKind::StudentT3: {
      std::student_t_distribution<double> t(3.0);
      for (double& v : out) v = t(engine);
      break;
    }
    case DistributionKind::LaplaceUnitVar: {
      // Difference of two Exp(1) draws is Laplace(0, 1); scale b = 1/sqrt 2.
      std::exponential_distribution<double> expo(1.0);
      const double b = 1.0 / kSqrt2;
      for (double& v : out) {
        const double a = expo(engine);
        v = b * (a - expo(engine));
      }
      break;
    }
    case DistributionKind::GaussianMixture: {
      // 0.5 N(-2, 1) + 0.5 N(2, 1) has variance 5.
      std::normal_distribution<double> normal;
      std::bernoulli_distribution coin(0.5);
      const double scale = 1.0 / std::sqrt(5.0);
      for (double& v : out) {
        const double mean = coin(engine) ? 2.0 : -2.0;
        v = (mean + normal(engine)) * scale;
      }
      break;
    }
    case DistributionKind::SkewedExpMinus1: {
      std::exponential_distribution<double> expo(1.0);
      for (double& v : out) v = expo(engine) - 1.0;
      break;
    }
  }
  return out;
}

double mmd_rbf(std::span<const double> x, std::span<const double> y, double bandwidth) {
  if (x.size() < 2 || y.size() < 2) throw Error(ErrorCode::TooFewValues, "MMD needs at least 2 points per sample");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorCode::DegenerateBandwidth, "kernel bandwidth must be positive and finite");
  }
  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
  const auto kernel = [gamma](double a, double b) {
    const double d = a - b;
    return std::exp(-gamma * d * d);
  };

  // Within-sample sums over i < j, doubled for the i != j convention.
  const auto within = [&](std::span<const double> s) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) sum += kernel(s[i], s[j]);
    }
    const double n = static_cast<double>(s.size());
    return 2.0 * sum.value() / (n * (n - 1.0));
  };

  CompensatedSum cross;
  for (const double a : x) {
    for (const double b : y) cross += kernel(a, b);
  }
  const double kxy = cross.value() / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  return within(x) + within(y) - 2.0 * kxy;
}

double mmd_rbf(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) throw Error(ErrorCode::TooFewValues, "MMD needs at least 2 points per sample");
  std::vector<double> pooled;
  pooled.reserve(x.size() + y.size());
  pooled.insert(pooled.end(), x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const double h = median_pairwise_abs_difference(pooled);
  if (!(h > 0.0)) throw Error(ErrorCode::DegenerateBandwidth, "median pairwise distance of the pooled sample is zero");
  return mmd_rbf(x, y, h);
}

MardiaStats mardia_univariate(std::span<const double> x) {
  if (x.size() < 4) throw Error(ErrorCode::TooFewValues, "Mardia statistics need at least 4 values");
  const double n = static_cast<double>(x.size());
  CompensatedSum s1;
  for (const double v : x) s1 += v;
  const double mean = s1.value() / n;

  CompensatedSum s2, s3, s4;
  for (const double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const double m2 = s2.value() / n;
  if (!(m2 > 0.0)) throw Error(ErrorCode::ZeroVariance, "sample variance is zero");
  const double m3 = s3.value() / n;
  const double m4 = s4.value() / n;

  MardiaStats out;
  const double skew = m3 / std::pow(m2, 1.5);
  const double excess = m4 / (m2 * m2) - 3.0;
  out.skew2 = skew * skew;
  out.excess2 = excess * excess;
  out.combined = out.skew2 + out.excess2;
  return out;
}

double wasserstein2_to_normal(std::span<const double> x) {
  if (x.size() < 2) throw Error(ErrorCode::TooFewValues, "W2 needs at least 2 values");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  CompensatedSum sum;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double q = normal_quantile((static_cast<double>(i) + 0.5) / n);
    const double d = sorted[i] - q;
    sum += d * d;
  }
  return std::sqrt(sum.value() / n);
}

std::array<std::uint64_t, 2> divergence_row_seeds(std::uint64_t seed, std::size_t row) noexcept {
  const std::uint64_t base = seed + static_cast<std::uint64_t>(row) * 0x9E3779B97F4A7C15ULL;
  return {base, base + 1};
}

std::vector<DivergenceReport> divergence_table(std::size_t n, std::uint64_t seed, DivergenceOptions options) {
  if (n < 100) throw Error(ErrorCode::InvalidArgument, "divergence table needs n >= 100");
  std::vector<DivergenceReport> rows;
  rows.reserve(kAllDistributions.size());

  for (std::size_t row = 0; row < kAllDistributions.size(); ++row) {
    const DistributionKind kind = kAllDistributions[row];
    const auto seeds = divergence_row_seeds(seed, row);
    const std::vector<double> x = sample(kind, n, seeds[0]);
    const std::vector<double> reference = sample(DistributionKind::Gaussian, n, seeds[1]);

    DivergenceReport report;
    report.distribution = kind;
    report.sample_size = n;
    report.seed = seed;
    report.energy_distance = energy_distance(x).rho_hat;

    const std::size_t mmd_n = options.mmd_max_samples == 0 ? n : std::min(n, options.mmd_max_samples);
    report.mmd_rbf = mmd_rbf(std::span(x).first(mmd_n), std::span(reference).first(mmd_n));

    const MardiaStats mardia = mardia_univariate(x);
    report.mardia_skew2 = mardia.skew2;
    report.mardia_excess2 = mardia.excess2;
    report.mardia_combined = mardia.combined;
    report.wasserstein2 = wasserstein2_to_normal(x);
    rows.push_back(report);
  }
  return rows;
}

}  // namespace rhoindex
