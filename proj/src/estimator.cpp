#include "rhoindex/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rhoindex/numeric.hpp"

namespace rhoindex {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (const double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains a non-finite value");
  }
}

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  return out;
}

double sorted_self_term(std::span<const double> sorted) {
  const std::size_t m = sorted.size();
  const double md = static_cast<double>(m);
  CompensatedSum sum;
  for (std::size_t k = 0; k < m; ++k) {
    // 1-based rank (k + 1): coefficient 2(k+1) - m - 1.
    sum += (2.0 * static_cast<double>(k) + 1.0 - md) * sorted[k];
  }
  return 2.0 * sum.value() / (md * (md - 1.0));
}

}  // namespace

void validate_coupling_matrix(const Matrix& matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw Error(ErrorCode::NonSquare, "coupling matrix is " + std::to_string(matrix.rows()) + "x" +
                                          std::to_string(matrix.cols()));
  }
  if (matrix.rows() < 2) throw Error(ErrorCode::DimTooSmall, "coupling matrix dimension must be at least 2");
  if (!matrix.allFinite()) throw Error(ErrorCode::NonFiniteEntry, "coupling matrix has NaN or Inf entries");
}

OffDiagonalSet extract_offdiagonals(const Matrix& matrix, ExtractionMode mode) {
  validate_coupling_matrix(matrix);
  const Eigen::Index d = matrix.rows();
  OffDiagonalSet out;
  out.mode = mode;
  const auto dd = static_cast<std::size_t>(d);
  out.values.reserve(mode == ExtractionMode::AllPairs ? dd * (dd - 1) : dd * (dd - 1) / 2);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index j0 = mode == ExtractionMode::AllPairs ? 0 : i + 1;
    for (Eigen::Index j = j0; j < d; ++j) {
      if (i != j) out.values.push_back(matrix(i, j));
    }
  }
  return out;
}

ZSample robust_standardize(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorCode::TooFewValues, "robust standardization needs at least 2 values");
  require_finite(values, "standardization input");

  const double center = median(values);
  std::vector<double> deviations(values.size());
  std::transform(values.begin(), values.end(), deviations.begin(),
                 [center](double v) { return std::fabs(v - center); });
  const double mad = median(deviations);
  if (!(mad > 0.0)) {
    throw Error(ErrorCode::DegenerateSpread, "MAD of the off-diagonal entries is zero (constant or identity-like input)");
  }

  ZSample out;
  out.source = ZSource::WeightMad;
  out.center = center;
  out.scale = kMadConsistency * mad;
  out.z.resize(values.size());
  std::transform(values.begin(), values.end(), out.z.begin(),
                 [&](double v) { return (v - center) / out.scale; });
  return out;
}

double fisher_z(double r, std::size_t n_obs) {
  if (n_obs <= 3) throw Error(ErrorCode::TooFewObservations, "Fisher z needs more than 3 observations");
  if (!(std::fabs(r) < 1.0)) {
    throw Error(ErrorCode::CorrelationOutOfRange, "correlation " + std::to_string(r) + " has |r| >= 1");
  }
  return std::sqrt(static_cast<double>(n_obs) - 3.0) * std::atanh(r);
}

Matrix correlation_matrix(const Matrix& activations) {
  const Eigen::Index n = activations.rows();
  const Eigen::Index d = activations.cols();
  if (!activations.allFinite()) throw Error(ErrorCode::NonFiniteEntry, "activations contain NaN or Inf");

  Matrix centered = activations.rowwise() - activations.colwise().mean();
  std::vector<double> ss(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) acc += centered(k, j) * centered(k, j);
    if (!(acc > 0.0)) {
      throw Error(ErrorCode::ZeroVarianceColumn, "activation column " + std::to_string(j) + " has zero variance");
    }
    ss[static_cast<std::size_t>(j)] = acc;
  }

  Matrix r = Matrix::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double* ci = centered.col(i).data();
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double* cj = centered.col(j).data();
      double acc = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) acc += ci[k] * cj[k];
      // sqrt(s * s) == s exactly, so identical columns give |r| == 1.
      const double value = acc / std::sqrt(ss[static_cast<std::size_t>(i)] * ss[static_cast<std::size_t>(j)]);
      r(i, j) = value;
      r(j, i) = value;
    }
  }
  return r;
}

ZSample zsample_from_activations(const Matrix& activations) {
  if (activations.rows() <= 3) {
    throw Error(ErrorCode::TooFewObservations, "activation matrix needs more than 3 rows");
  }
  if (activations.cols() < 2) throw Error(ErrorCode::DimTooSmall, "activation matrix needs at least 2 columns");

  const auto n_obs = static_cast<std::size_t>(activations.rows());
  const Matrix r = correlation_matrix(activations);
  const OffDiagonalSet upper = extract_offdiagonals(r, ExtractionMode::UpperTriangle);

  ZSample out;
  out.source = ZSource::FisherActivations;
  out.center = 0.0;
  out.scale = 1.0;
  out.n_obs = n_obs;
  out.z.reserve(upper.count());
  for (const double value : upper.values) out.z.push_back(fisher_z(value, n_obs));
  return out;
}

double gaussian_self_constant() noexcept { return 2.0 / std::sqrt(kPi); }

double mixed_expectation(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "mixed expectation argument is not finite");
  // 2 Phi(x) - 1 == erf(x / sqrt 2), which avoids cancellation near 0.
  return 2.0 * normal_pdf(x) + x * std::erf(x / kSqrt2);
}

double empirical_self_term(std::span<const double> z) {
  if (z.size() < 2) throw Error(ErrorCode::TooFewValues, "self term needs at least 2 values");
  require_finite(z, "self-term input");
  return sorted_self_term(sorted_copy(z));
}

double empirical_self_term_bruteforce(std::span<const double> z) {
  if (z.size() < 2) throw Error(ErrorCode::TooFewValues, "self term needs at least 2 values");
  const std::size_t m = z.size();
  CompensatedSum sum;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) sum += std::fabs(z[i] - z[j]);
  }
  const double md = static_cast<double>(m);
  return 2.0 * sum.value() / (md * (md - 1.0));
}

RhoEstimate energy_distance(std::span<const double> z) {
  if (z.size() < 2) throw Error(ErrorCode::TooFewValues, "energy distance needs at least 2 values");
  require_finite(z, "z sample");

  const std::vector<double> sorted = sorted_copy(z);
  const double m = static_cast<double>(sorted.size());

  CompensatedSum mixed;
  for (const double v : sorted) mixed += mixed_expectation(v);

  RhoEstimate out;
  out.m = sorted.size();
  out.mixed_term = 2.0 * mixed.value() / m;
  out.self_term = sorted_self_term(sorted);
  out.gaussian_constant = gaussian_self_constant();
  out.rho_hat = out.mixed_term - out.self_term - out.gaussian_constant;
  out.rho_hat_plus = std::max(0.0, out.rho_hat);
  return out;
}

RhoEstimate rho_from_weights(const Matrix& matrix, ExtractionMode mode) {
  const OffDiagonalSet off = extract_offdiagonals(matrix, mode);
  return energy_distance(robust_standardize(off.values));
}

RhoEstimate rho_from_activations(const Matrix& activations) {
  return energy_distance(zsample_from_activations(activations));
}

}  // namespace rhoindex
