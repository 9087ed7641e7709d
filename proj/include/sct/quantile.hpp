#pragma once

// Order-statistic quantiles of a sorted Monte Carlo sample and their
// accuracy diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "sct/error.hpp"

namespace sct {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// 1-based rank ceil((1 - alpha) r), guarded against (1 - alpha) r landing a
/// rounding error above an integer.
inline std::size_t quantile_rank(std::size_t r, double alpha) {
  const double target = (1.0 - alpha) * static_cast<double>(r);
  const double rank = std::ceil(target - 1e-9 * std::max(1.0, target));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1, r);
}

/// Distribution-free interval [T_(l), T_(u)] for the population
/// (1 - alpha) quantile, using the normal approximation to the binomial
/// count below the quantile at the given two-sided level z.
inline Interval order_statistic_interval(std::span<const double> sorted, double alpha, double z = 2.5758293035489004) {
  const auto r = static_cast<double>(sorted.size());
  const double q = 1.0 - alpha;
  const double sd = std::sqrt(r * q * (1.0 - q));
  const std::size_t k = quantile_rank(sorted.size(), alpha);
  const auto lo = static_cast<std::size_t>(std::clamp(std::floor(r * q - z * sd), 1.0, r));
  const auto hi = static_cast<std::size_t>(std::clamp(std::ceil(r * q + z * sd), 1.0, r));
  return {sorted[std::min(lo, k) - 1], sorted[std::max(hi, k) - 1]};
}

/// Edwards-Berry description of the realized coverage P{T < c_hat | c_hat}:
/// a Beta law with shapes <(1-alpha) r> and r - <(1-alpha) r> - 1.
struct CoverageLaw {
  double mean = 0.0;
  double standard_error = 0.0;
  Interval three_sigma;
};

inline CoverageLaw edwards_berry(std::size_t r, double alpha) {
  const auto k = static_cast<double>(quantile_rank(r, alpha));
  const double a = k;
  const double b = static_cast<double>(r) - k - 1.0;
  if (b <= 0.0) throw Error(Errc::TooFewReplicates, "too few replicates above the quantile");
  const double mean = a / (a + b);
  const double se = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
  return {mean, se, {mean - 3.0 * se, mean + 3.0 * se}};
}

}  // namespace sct
