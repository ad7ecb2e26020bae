#include "rhoindex/numeric.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace rhoindex {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double median(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> buf(values.begin(), values.end());
  const std::size_t n = buf.size();
  const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(buf.begin(), mid, buf.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(buf.begin(), mid);
  return lower + 0.5 * (upper - lower);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

// Number of pairs i < j with x[j] - x[i] <= t, x ascending.
std::uint64_t count_pairs_le(std::span<const double> x, double t) {
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    while (i < j && x[j] - x[i] > t) ++i;
    count += j - i;
  }
  return count;
}

// k-th smallest (0-based) pairwise difference of ascending x.
double select_pairwise_difference(std::span<const double> x, std::uint64_t k) {
  const std::size_t n = x.size();
  const std::uint64_t limit = 4 * static_cast<std::uint64_t>(n) + 64;

  // Invariant: count(lo) <= k < count(hi).
  double lo = -1.0;
  std::uint64_t count_lo = 0;
  double hi = x.back() - x.front();
  std::uint64_t count_hi = count_pairs_le(x, hi);

  while (count_hi - count_lo > limit) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) return hi;
    const std::uint64_t c = count_pairs_le(x, mid);
    if (c > k) {
      hi = mid;
      count_hi = c;
    } else {
      lo = mid;
      count_lo = c;
    }
  }

  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(count_hi - count_lo));
  std::size_t i_hi = 0;
  std::size_t i_lo = 0;
  for (std::size_t j = 0; j < n; ++j) {
    while (i_hi < j && x[j] - x[i_hi] > hi) ++i_hi;
    while (i_lo < j && x[j] - x[i_lo] > lo) ++i_lo;
    for (std::size_t i = i_hi; i < i_lo; ++i) candidates.push_back(x[j] - x[i]);
  }
  const auto rank = static_cast<std::ptrdiff_t>(k - count_lo);
  std::nth_element(candidates.begin(), candidates.begin() + rank, candidates.end());
  return candidates[static_cast<std::size_t>(rank)];
}

}  // namespace

double median_pairwise_abs_difference(std::span<const double> values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const std::uint64_t n = x.size();
  const std::uint64_t pairs = n * (n - 1) / 2;
  const double upper = select_pairwise_difference(x, pairs / 2);
  if (pairs % 2 == 1) return upper;
  const double lower = select_pairwise_difference(x, pairs / 2 - 1);
  return lower + 0.5 * (upper - lower);
}

}  // namespace rhoindex
