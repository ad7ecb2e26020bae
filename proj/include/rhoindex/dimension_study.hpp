#pragma once

// Monte Carlo study of the redundancy estimator on random Gaussian matrices
// across latent dimensions.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rhoindex {

enum class Symmetry { Symmetric, Nonsymmetric, Both };
enum class BudgetMode { SingleMatrix, FixedTotal };

inline const std::vector<std::size_t> kDefaultDims = {16, 24, 32, 48, 64, 96, 128, 192};

struct DimScanConfig {
  std::vector<std::size_t> dims = kDefaultDims;
  std::size_t trials = 100;
  Symmetry symmetry = Symmetry::Nonsymmetric;
  BudgetMode budget = BudgetMode::SingleMatrix;
  std::uint64_t master_seed = 0;
};

struct DimScanRecord {
  std::size_t n = 0;
  std::size_t trial = 0;
  bool symmetric = false;
  double rho_hat = 0.0;  // NaN when error_flag is set
  std::size_t m_used = 0;
  std::string error_flag;

  friend bool operator==(const DimScanRecord&, const DimScanRecord&) = default;
};

struct DimScanSummary {
  std::size_t n = 0;
  bool symmetric = false;
  std::size_t count = 0;
  std::size_t m_used = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;

  friend bool operator==(const DimScanSummary&, const DimScanSummary&) = default;
};

void validate(const DimScanConfig& config);

/// Off-diagonal count of one n x n matrix under the given symmetry.
std::size_t off_diagonal_count(std::size_t n, bool symmetric) noexcept;

/// Matrices pooled per trial in FIXED_TOTAL mode.
std::size_t pooled_matrix_count(std::size_t n, std::size_t max_dim, bool symmetric) noexcept;

std::uint64_t dimscan_trial_seed(std::uint64_t master_seed, std::size_t n, std::size_t trial, bool symmetric) noexcept;

/// A single trial; errors are recorded in the returned row.
DimScanRecord run_dimscan_trial(const DimScanConfig& config, std::size_t n, std::size_t trial, bool symmetric);

/// Records ordered by (symmetric first when BOTH, n, trial).
std::vector<DimScanRecord> run_dimscan(const DimScanConfig& config);

/// Per (n, symmetric) statistics over error-free records, ordered by
/// (symmetric, n). Throws InsufficientTrials if a group has < 2 records.
std::vector<DimScanSummary> summarize_dimscan(std::span<const DimScanRecord> records);

/// OLS slope of log(std) on log(m_used).
double log_log_slope(std::span<const DimScanSummary> summary);

struct MonotoneCheck {
  std::size_t violations = 0;
  double worst_relative_increase = 0.0;
};

/// Adjacent-pair increases of std along increasing n.
MonotoneCheck check_std_nonincreasing(std::span<const DimScanSummary> summary);

}  // namespace rhoindex
