#include "rhoindex/dimension_study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "rhoindex/error.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/numeric.hpp"

namespace rhoindex {

namespace {

Matrix gaussian_matrix(std::size_t n, bool symmetric, Engine& engine) {
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(n);
  Matrix g(d, d);
  // Row-major fill so the stream maps to entries independent of storage order.
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = normal(engine);
  }
  if (!symmetric) return g;
  Matrix a = (g + g.transpose()) / kSqrt2;
  return a;
}

std::vector<bool> symmetries(Symmetry s) {
  switch (s) {
    case Symmetry::Symmetric: return {true};
    case Symmetry::Nonsymmetric: return {false};
    case Symmetry::Both: return {true, false};
  }
  return {};
}

}  // namespace

void validate(const DimScanConfig& config) {
  if (config.dims.empty()) throw Error(ErrorCode::InvalidArgument, "dimension list is empty");
  for (const std::size_t n : config.dims) {
    if (n < 4) throw Error(ErrorCode::InvalidArgument, "every dimension must be at least 4");
  }
  if (config.trials < 2) throw Error(ErrorCode::InvalidArgument, "trials must be at least 2");
}

std::size_t off_diagonal_count(std::size_t n, bool symmetric) noexcept {
  return symmetric ? n * (n - 1) / 2 : n * (n - 1);
}

std::size_t pooled_matrix_count(std::size_t n, std::size_t max_dim, bool symmetric) noexcept {
  const std::size_t target = off_diagonal_count(max_dim, symmetric);
  const std::size_t per = off_diagonal_count(n, symmetric);
  return (target + per - 1) / per;
}

std::uint64_t dimscan_trial_seed(std::uint64_t master_seed, std::size_t n, std::size_t trial, bool symmetric) noexcept {
  return derive_seed(master_seed, {n, trial, symmetric ? 1u : 0u});
}

DimScanRecord run_dimscan_trial(const DimScanConfig& config, std::size_t n, std::size_t trial, bool symmetric) {
  Engine engine = make_engine(dimscan_trial_seed(config.master_seed, n, trial, symmetric));
  const std::size_t max_dim = *std::max_element(config.dims.begin(), config.dims.end());
  const std::size_t matrices =
      config.budget == BudgetMode::FixedTotal ? pooled_matrix_count(n, max_dim, symmetric) : 1;
  const ExtractionMode mode = symmetric ? ExtractionMode::UpperTriangle : ExtractionMode::AllPairs;

  DimScanRecord record;
  record.n = n;
  record.trial = trial;
  record.symmetric = symmetric;

  std::vector<double> pooled;
  pooled.reserve(matrices * off_diagonal_count(n, symmetric));
  for (std::size_t k = 0; k < matrices; ++k) {
    const OffDiagonalSet off = extract_offdiagonals(gaussian_matrix(n, symmetric, engine), mode);
    pooled.insert(pooled.end(), off.values.begin(), off.values.end());
  }
  record.m_used = pooled.size();

  try {
    record.rho_hat = energy_distance(robust_standardize(pooled)).rho_hat;
  } catch (const Error& e) {
    record.rho_hat = std::numeric_limits<double>::quiet_NaN();
    record.error_flag = std::string(to_string(e.code()));
  }
  return record;
}

std::vector<DimScanRecord> run_dimscan(const DimScanConfig& config) {
  validate(config);
  std::vector<DimScanRecord> records;
  const auto syms = symmetries(config.symmetry);
  records.reserve(syms.size() * config.dims.size() * config.trials);
  for (const bool symmetric : syms) {
    for (const std::size_t n : config.dims) {
      for (std::size_t trial = 0; trial < config.trials; ++trial) {
        records.push_back(run_dimscan_trial(config, n, trial, symmetric));
      }
    }
  }
  return records;
}

std::vector<DimScanSummary> summarize_dimscan(std::span<const DimScanRecord> records) {
  // Ordered by (symmetric descending, n ascending) to match run_dimscan.
  struct Key {
    bool symmetric;
    std::size_t n;
    bool operator<(const Key& o) const { return symmetric != o.symmetric ? symmetric > o.symmetric : n < o.n; }
  };
  std::map<Key, std::vector<const DimScanRecord*>> groups;
  for (const DimScanRecord& r : records) {
    auto& group = groups[Key{r.symmetric, r.n}];
    if (r.error_flag.empty()) group.push_back(&r);
  }

  std::vector<DimScanSummary> out;
  for (const auto& [key, group] : groups) {
    if (group.size() < 2) {
      throw Error(ErrorCode::InsufficientTrials,
                  "n=" + std::to_string(key.n) + " has " + std::to_string(group.size()) + " usable trials");
    }
    std::vector<double> values;
    values.reserve(group.size());
    double m_total = 0.0;
    for (const DimScanRecord* r : group) {
      values.push_back(r->rho_hat);
      m_total += static_cast<double>(r->m_used);
    }
    std::sort(values.begin(), values.end());

    CompensatedSum sum;
    for (const double v : values) sum += v;
    const double count = static_cast<double>(values.size());
    const double mean = sum.value() / count;
    CompensatedSum sq;
    for (const double v : values) sq += (v - mean) * (v - mean);

    DimScanSummary s;
    s.n = key.n;
    s.symmetric = key.symmetric;
    s.count = values.size();
    s.m_used = static_cast<std::size_t>(std::llround(m_total / count));
    s.mean = mean;
    s.stddev = std::sqrt(sq.value() / (count - 1.0));
    s.q05 = quantile_sorted(values, 0.05);
    s.q95 = quantile_sorted(values, 0.95);
    out.push_back(s);
  }
  return out;
}

double log_log_slope(std::span<const DimScanSummary> summary) {
  if (summary.size() < 2) throw Error(ErrorCode::InsufficientTrials, "slope needs at least two dimensions");
  double sx = 0.0, sy = 0.0;
  for (const auto& s : summary) {
    sx += std::log(static_cast<double>(s.m_used));
    sy += std::log(s.stddev);
  }
  const double k = static_cast<double>(summary.size());
  const double mx = sx / k;
  const double my = sy / k;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& s : summary) {
    const double dx = std::log(static_cast<double>(s.m_used)) - mx;
    sxy += dx * (std::log(s.stddev) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

MonotoneCheck check_std_nonincreasing(std::span<const DimScanSummary> summary) {
  std::vector<DimScanSummary> sorted(summary.begin(), summary.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  MonotoneCheck out;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].stddev > sorted[i - 1].stddev) {
      ++out.violations;
      out.worst_relative_increase =
          std::max(out.worst_relative_increase, sorted[i].stddev / sorted[i - 1].stddev - 1.0);
    }
  }
  return out;
}

}  // namespace rhoindex
