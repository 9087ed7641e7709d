#pragma once

// Geometry of a simultaneous confidence tube for x'B_i - x'B_j: an ellipsoid
// {z : (z - center)'(nu Omega)^{-1}(z - center) <= c x'Delta_ij x} at each x.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sct/engine.hpp"
#include "sct/error.hpp"
#include "sct/model.hpp"
#include "sct/sup_solver.hpp"

namespace sct {

struct TubeCrossSection {
  Eigen::VectorXd x;       // covariates, leading 1 implicit
  Eigen::VectorXd center;  // x'(B_i - B_j)
  Eigen::MatrixXd shape;   // nu Omega
  double radius_sq = 0.0;  // c x'Delta_ij x

  /// Squared (nu Omega)^{-1}-distance of z from the center.
  double mahalanobis_sq(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd d = z - center;
    return d.dot(shape.llt().solve(d));
  }
  bool contains(const Eigen::VectorXd& z) const { return mahalanobis_sq(z) <= radius_sq; }
};

namespace detail {

inline Eigen::VectorXd with_intercept(const Eigen::VectorXd& x) {
  Eigen::VectorXd e(x.size() + 1);
  e(0) = 1.0;
  e.tail(x.size()) = x;
  return e;
}

inline void require_tube_inputs(const FittedModels& fit, const Pair& pr, double c) {
  require_nondegenerate(fit);
  validate_pair(fit, pr);
  if (!(c >= 0.0)) throw Error(Errc::InvalidArgument, "critical constant must be nonnegative");
}

}  // namespace detail

inline TubeCrossSection cross_section(const FittedModels& fit, const Pair& pr, double c, const Eigen::VectorXd& x) {
  detail::require_tube_inputs(fit, pr, c);
  if (x.size() != fit.p) throw Error(Errc::InvalidArgument, "covariate point has the wrong dimension");
  const Eigen::VectorXd e = detail::with_intercept(x);
  TubeCrossSection cs;
  cs.x = x;
  cs.center = (fit.bhat[pr.i - 1] - fit.bhat[pr.j - 1]).transpose() * e;
  cs.shape = fit.pooled_scatter;
  cs.radius_sq = std::max(0.0, c * e.dot(fit.delta(pr.i - 1, pr.j - 1) * e));
  return cs;
}

struct BandPoint {
  Eigen::VectorXd x;
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Projection of the tube onto response q (1-based): center_q -+
/// sqrt(c x'Delta x (nu Omega)_qq) at each grid point.
inline std::vector<BandPoint> projected_band(const FittedModels& fit, const Pair& pr, double c, int q,
                                             std::span<const Eigen::VectorXd> grid) {
  detail::require_tube_inputs(fit, pr, c);
  if (q < 1 || q > fit.m) throw Error(Errc::InvalidArgument, "response index out of range");
  const double omega_qq = fit.pooled_scatter(q - 1, q - 1);
  std::vector<BandPoint> band;
  band.reserve(grid.size());
  for (const Eigen::VectorXd& x : grid) {
    const TubeCrossSection cs = cross_section(fit, pr, c, x);
    const double half = std::sqrt(cs.radius_sq * omega_qq);
    band.push_back({x, cs.center(q - 1), cs.center(q - 1) - half, cs.center(q - 1) + half});
  }
  return band;
}

/// Convenience overload for a single covariate.
inline std::vector<BandPoint> projected_band(const FittedModels& fit, const Pair& pr, double c, int q,
                                             std::span<const double> grid) {
  std::vector<Eigen::VectorXd> points;
  points.reserve(grid.size());
  for (double x : grid) points.push_back(Eigen::VectorXd::Constant(1, x));
  return projected_band(fit, pr, c, q, std::span<const Eigen::VectorXd>(points));
}

/// True when the zero difference lies inside the tube over the whole box,
/// i.e. t_ij <= c.
inline bool contains_zero_line(const FittedModels& fit, const Pair& pr, double c, const CovariateBox& box) {
  detail::require_tube_inputs(fit, pr, c);
  return observed_statistic(fit, pr, box).value <= c;
}

struct SignedInterval {
  double lower = 0.0;
  double upper = 0.0;
  int sign = 0;  // +1: x'B_i > x'B_j on the interval, -1: below
};

struct SignificanceRegion {
  int q = 0;
  std::vector<SignedInterval> intervals;
  int resolution = 0;
};

inline std::vector<double> equispaced(double a, double b, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) out[s] = n == 1 ? a : a + (b - a) * s / (n - 1);
  if (n > 1) out.back() = b;
  return out;
}

/// Covariate sub-intervals of a finite box where the projected band for
/// response q excludes zero. Grid scan, then bisection of each boundary on
/// |center_q| - half-width. Per-response projections are conservative: an
/// empty region does not imply the full tube contains the zero line.
inline SignificanceRegion significance_region(const FittedModels& fit, const Pair& pr, double c, int q,
                                              const CovariateBox& box, int resolution) {
  detail::require_tube_inputs(fit, pr, c);
  if (fit.p != 1 || box.dim() != 1) throw Error(Errc::NotUnivariate, "significance regions need one covariate");
  validate_box(box);
  if (!box.is_finite()) throw Error(Errc::UnboundedBox, "significance regions need a finite covariate range");
  if (q < 1 || q > fit.m) throw Error(Errc::InvalidArgument, "response index out of range");
  if (resolution < 2) throw Error(Errc::InvalidArgument, "resolution must be at least 2");

  const Eigen::VectorXd diff = fit.bhat[pr.i - 1].col(q - 1) - fit.bhat[pr.j - 1].col(q - 1);
  const Eigen::MatrixXd delta = fit.delta(pr.i - 1, pr.j - 1);
  const double omega_qq = fit.pooled_scatter(q - 1, q - 1);
  auto center = [&](double x) { return diff(0) + diff(1) * x; };
  auto half_width = [&](double x) {
    const double var = delta(0, 0) + 2.0 * delta(0, 1) * x + delta(1, 1) * x * x;
    return std::sqrt(c * var * omega_qq);
  };
  // Positive where the band lies strictly on the `sign` side of zero.
  auto margin = [&](double x, int sign) { return sign * center(x) - half_width(x); };
  auto sign_at = [&](double x) { return center(x) > 0.0 ? 1 : -1; };
  const double a = box.bounds[0].lower, b = box.bounds[0].upper;
  const double tol = 1e-10 * std::max(b - a, 1e-300);
  auto refine = [&](double inside, double outside, int sign) {
    while (std::abs(outside - inside) > tol) {
      const double mid = 0.5 * (inside + outside);
      (margin(mid, sign) > 0.0 ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };

  SignificanceRegion region{q, {}, resolution};
  const std::vector<double> xs = equispaced(a, b, resolution);
  size_t s = 0;
  while (s < xs.size()) {
    const int sign = sign_at(xs[s]);
    if (!(margin(xs[s], sign) > 0.0)) {
      ++s;
      continue;
    }
    size_t e = s;
    while (e + 1 < xs.size() && margin(xs[e + 1], sign) > 0.0) ++e;
    const double lo = s == 0 ? a : refine(xs[s], xs[s - 1], sign);
    const double hi = e + 1 == xs.size() ? b : refine(xs[e], xs[e + 1], sign);
    region.intervals.push_back({lo, hi, sign});
    s = e + 1;
  }
  return region;
}

}  // namespace sct
