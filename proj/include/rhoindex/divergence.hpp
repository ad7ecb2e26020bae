#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rhoindex {

enum class DistributionKind { Gaussian, StudentT3, LaplaceUnitVar, GaussianMixture, SkewedExpMinus1 };

inline constexpr std::array<DistributionKind, 5> kAllDistributions = {
    DistributionKind::Gaussian, DistributionKind::StudentT3, DistributionKind::LaplaceUnitVar,
    DistributionKind::GaussianMixture, DistributionKind::SkewedExpMinus1};

std::string_view to_string(DistributionKind kind) noexcept;
DistributionKind distribution_from_string(std::string_view name);

/// Deterministic draw of `n` values. Every kind except t(3) has mean 0 and
/// variance 1; t(3) is left at its natural scale (variance 3).
std::vector<double> sample(DistributionKind kind, std::size_t n, std::uint64_t seed);

/// Unbiased MMD^2 with a Gaussian kernel whose bandwidth is the median
/// pairwise absolute difference of the pooled sample.
double mmd_rbf(std::span<const double> x, std::span<const double> y);

/// Same estimator with an explicit bandwidth h (kernel exp(-(a-b)^2 / 2h^2)).
double mmd_rbf(std::span<const double> x, std::span<const double> y, double bandwidth);

struct MardiaStats {
  double skew2 = 0.0;
  double excess2 = 0.0;
  double combined = 0.0;
};

/// Univariate Mardia-style measures from central sample moments.
MardiaStats mardia_univariate(std::span<const double> x);

/// 1-D W2 distance to N(0, 1) via the quantile coupling with plotting
/// positions (i - 0.5) / n.
double wasserstein2_to_normal(std::span<const double> x);

struct DivergenceReport {
  DistributionKind distribution = DistributionKind::Gaussian;
  double energy_distance = 0.0;
  double mmd_rbf = 0.0;
  double mardia_skew2 = 0.0;
  double mardia_excess2 = 0.0;
  double mardia_combined = 0.0;
  double wasserstein2 = 0.0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const DivergenceReport&, const DivergenceReport&) = default;
};

struct DivergenceOptions {
  /// MMD is computed on the first min(n, mmd_max_samples) points of the
  /// sample and its reference; 0 means no cap.
  std::size_t mmd_max_samples = 2000;
};

/// Seeds used for row `row` of a table: {sample seed, reference seed}.
std::array<std::uint64_t, 2> divergence_row_seeds(std::uint64_t seed, std::size_t row) noexcept;

/// One report per distribution kind, in `kAllDistributions` order.
std::vector<DivergenceReport> divergence_table(std::size_t n, std::uint64_t seed, DivergenceOptions options = {});

}  // namespace rhoindex
