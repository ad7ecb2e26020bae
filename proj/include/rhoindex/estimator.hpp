#pragma once

// Energy-distance redundancy index of a coupling matrix.
//
// The index compares the empirical distribution of a matrix's standardized
// off-diagonal entries with N(0, 1):
//
//   rho_hat = (2/m) sum_k E|z_k - G|  -  E^|Z - Z'|  -  E|G - G'|
//
// with E|x - G| = 2 phi(x) + x (2 Phi(x) - 1), E|G - G'| = 2/sqrt(pi) and the
// self term the unbiased pairwise U-statistic. Entries are standardized either
// by median/MAD (weights) or by the Fisher z-transform of sample
// correlations (activations).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rhoindex/error.hpp"

namespace rhoindex {

using Matrix = Eigen::MatrixXd;

/// Median/MAD consistency factor for Gaussian data.
inline constexpr double kMadConsistency = 1.4826;

enum class ExtractionMode { AllPairs, UpperTriangle };

enum class ZSource { WeightMad, FisherActivations };

struct OffDiagonalSet {
  std::vector<double> values;
  ExtractionMode mode = ExtractionMode::AllPairs;

  std::size_t count() const noexcept { return values.size(); }
};

struct ZSample {
  std::vector<double> z;
  ZSource source = ZSource::WeightMad;
  double center = 0.0;
  double scale = 1.0;
  std::optional<std::size_t> n_obs;
};

struct RhoEstimate {
  double rho_hat = 0.0;
  double rho_hat_plus = 0.0;
  double mixed_term = 0.0;
  double self_term = 0.0;
  double gaussian_constant = 0.0;
  std::size_t m = 0;

  friend bool operator==(const RhoEstimate&, const RhoEstimate&) = default;
};

/// Throws NonSquare / DimTooSmall / NonFiniteEntry for invalid coupling
/// matrices.
void validate_coupling_matrix(const Matrix& matrix);

/// Off-diagonal entries in row-major scan order.
OffDiagonalSet extract_offdiagonals(const Matrix& matrix, ExtractionMode mode);

/// z_k = (x_k - median) / (1.4826 * MAD). Throws DegenerateSpread when MAD = 0.
ZSample robust_standardize(std::span<const double> values);

/// sqrt(n_obs - 3) * atanh(r).
double fisher_z(double r, std::size_t n_obs);

/// Pearson correlations of the columns (two-pass, mean-centred).
Matrix correlation_matrix(const Matrix& activations);

/// Fisher-transformed unique (i < j) column correlations of an n_obs x d
/// activation matrix.
ZSample zsample_from_activations(const Matrix& activations);

/// E|G - G'| = 2 / sqrt(pi).
double gaussian_self_constant() noexcept;

/// E|x - G| for G ~ N(0, 1).
double mixed_expectation(double x);

/// Unbiased U-statistic 2/(m(m-1)) sum_{i<j} |z_i - z_j| via the sorted
/// identity sum_k (2k - m - 1) z_(k).
double empirical_self_term(std::span<const double> z);

/// O(m^2) pairwise form of `empirical_self_term`, kept as a reference.
double empirical_self_term_bruteforce(std::span<const double> z);

RhoEstimate energy_distance(std::span<const double> z);
inline RhoEstimate energy_distance(const ZSample& sample) { return energy_distance(sample.z); }

RhoEstimate rho_from_weights(const Matrix& matrix, ExtractionMode mode = ExtractionMode::AllPairs);

RhoEstimate rho_from_activations(const Matrix& activations);

}  // namespace rhoindex
