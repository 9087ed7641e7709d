#pragma once

// Maximization of R(x) = (x'Ax)/(x'Dx), x = (1, x_1, ..., x_p), over a
// covariate box, an interval, or the whole covariate space.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sct/error.hpp"
#include "sct/random.hpp"

namespace sct {

/// Numerator form A (PSD) over denominator form D (PD), both (p+1) x (p+1).
struct QuadraticRatio {
  Eigen::MatrixXd numerator;
  Eigen::MatrixXd denominator;

  int p() const { return static_cast<int>(numerator.rows()) - 1; }
};

struct Bound {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool finite() const { return std::isfinite(lower) && std::isfinite(upper); }
  bool unbounded() const { return lower == -std::numeric_limits<double>::infinity() &&
                                  upper == std::numeric_limits<double>::infinity(); }
  double width() const { return upper - lower; }
  bool operator==(const Bound&) const = default;
};

struct CovariateBox {
  std::vector<Bound> bounds;

  static CovariateBox whole_space(int p) { return CovariateBox{std::vector<Bound>(static_cast<size_t>(p))}; }
  static CovariateBox point(std::span<const double> x) {
    CovariateBox box;
    for (double v : x) box.bounds.push_back({v, v});
    return box;
  }
  static CovariateBox interval(double a, double b) { return CovariateBox{{Bound{a, b}}}; }

  int dim() const { return static_cast<int>(bounds.size()); }
  bool is_whole_space() const {
    return std::all_of(bounds.begin(), bounds.end(), [](const Bound& b) { return b.unbounded(); });
  }
  bool is_finite() const {
    return std::all_of(bounds.begin(), bounds.end(), [](const Bound& b) { return b.finite(); });
  }
  bool contains(const Eigen::VectorXd& x) const {
    for (int l = 0; l < dim(); ++l)
      if (x(l) < bounds[l].lower || x(l) > bounds[l].upper) return false;
    return true;
  }
  Eigen::VectorXd center() const {
    Eigen::VectorXd c(dim());
    for (int l = 0; l < dim(); ++l) c(l) = 0.5 * (bounds[l].lower + bounds[l].upper);
    return c;
  }
  bool operator==(const CovariateBox&) const = default;
};

/// Throws unless every bound is ordered; infinite bounds are accepted.
inline void validate_box(const CovariateBox& box) {
  for (const Bound& b : box.bounds)
    if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower > b.upper)
      throw Error(Errc::InvalidArgument, "covariate bounds must satisfy a <= b");
}

/// R at covariate point x (leading 1 implied).
inline double ratio_at(const QuadraticRatio& q, const Eigen::VectorXd& x) {
  Eigen::VectorXd e(x.size() + 1);
  e(0) = 1.0;
  e.tail(x.size()) = x;
  return e.dot(q.numerator * e) / e.dot(q.denominator * e);
}

struct IntervalMax {
  double value = 0.0;
  double argmax = 0.0;
};

struct BoxMax {
  double value = 0.0;
  Eigen::VectorXd argmax;
};

namespace detail {

inline double horner(std::span<const double> c, double t) {
  double v = 0.0;
  for (size_t i = c.size(); i-- > 0;) v = v * t + c[i];
  return v;
}

/// Real roots of sum_i c[i] t^i. The effective degree drops every leading
/// coefficient below 1e-12 * max|c|. Degree 1 and 2 are solved in closed form,
/// higher degrees through the eigenvalues of the companion matrix.
inline std::vector<double> real_roots(std::span<const double> c) {
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  std::vector<double> roots;
  if (scale == 0.0) return roots;
  int degree = static_cast<int>(c.size()) - 1;
  while (degree > 0 && std::abs(c[degree]) <= 1e-12 * scale) --degree;
  if (degree == 0) return roots;
  if (degree == 1) {
    roots.push_back(-c[0] / c[1]);
  } else if (degree == 2) {
    const double disc = c[1] * c[1] - 4.0 * c[2] * c[0];
    if (disc < 0.0) return roots;
    const double q = -0.5 * (c[1] + std::copysign(std::sqrt(disc), c[1]));
    if (q != 0.0) {
      roots.push_back(q / c[2]);
      roots.push_back(c[0] / q);
    } else {
      roots.push_back(0.0);
    }
  } else {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -c[i] / c[degree];
    const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    for (const std::complex<double>& z : es.eigenvalues())
      if (std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
  }
  // One Newton step tightens closed-form roots against cancellation.
  std::vector<double> deriv;
  for (int i = 1; i <= degree; ++i) deriv.push_back(i * c[i]);
  for (double& t : roots) {
    const double d = horner(deriv, t);
    if (d != 0.0) {
      const double next = t - horner(c, t) / d;
      if (std::abs(horner(c, next)) < std::abs(horner(c, t))) t = next;
    }
  }
  return roots;
}

inline double quad_ratio(double n0, double n1, double n2, double d0, double d1, double d2, double t) {
  return (n0 + t * (n1 + t * n2)) / (d0 + t * (d1 + t * d2));
}

}  // namespace detail

/// Coefficients (ascending powers) of N'(t)D(t) - N(t)D'(t) for
/// N(t) = a00 + 2 a01 t + a11 t^2 and D(t) likewise.
inline std::array<double, 4> stationarity_polynomial(double a00, double a01, double a11, double d00, double d01,
                                                     double d11) {
  const double n0 = a00, n1 = 2.0 * a01, n2 = a11;
  const double e0 = d00, e1 = 2.0 * d01, e2 = d11;
  // N'D = n1 e0 + (n1 e1 + 2 n2 e0) t + (n1 e2 + 2 n2 e1) t^2 + 2 n2 e2 t^3
  // ND' = n0 e1 + (2 n0 e2 + n1 e1) t + (2 n1 e2 + n2 e1) t^2 + 2 n2 e2 t^3
  return {n1 * e0 - n0 * e1, (n1 * e1 + 2.0 * n2 * e0) - (2.0 * n0 * e2 + n1 * e1),
          (n1 * e2 + 2.0 * n2 * e1) - (2.0 * n1 * e2 + n2 * e1), 2.0 * n2 * e2 - 2.0 * n2 * e2};
}

/// Scalar kernel of sup_interval: entries of the symmetric 2x2 forms.
/// Candidates are a, b and the stationary points strictly inside (a, b);
/// ties resolve to the earliest candidate, so a constant ratio returns a.
inline IntervalMax interval_max(double a00, double a01, double a11, double d00, double d01, double d11, double a,
                                double b) {
  const double n0 = a00, n1 = 2.0 * a01, n2 = a11;
  const double e0 = d00, e1 = 2.0 * d01, e2 = d11;
  IntervalMax best{detail::quad_ratio(n0, n1, n2, e0, e1, e2, a), a};
  if (b > a) {
    const double vb = detail::quad_ratio(n0, n1, n2, e0, e1, e2, b);
    if (vb > best.value) best = {vb, b};
    const auto g = stationarity_polynomial(a00, a01, a11, d00, d01, d11);
    for (double t : detail::real_roots(g)) {
      if (!(t > a && t < b)) continue;
      const double v = detail::quad_ratio(n0, n1, n2, e0, e1, e2, t);
      if (v > best.value) best = {v, t};
    }
  }
  best.value = std::max(best.value, 0.0);
  return best;
}

inline IntervalMax sup_interval(const QuadraticRatio& q, double a, double b) {
  if (q.numerator.rows() != 2 || q.denominator.rows() != 2)
    throw Error(Errc::NotUnivariate, "sup_interval needs a single covariate (2x2 forms)");
  if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b))
    throw Error(Errc::InvalidArgument, "sup_interval needs finite a <= b");
  const auto& A = q.numerator;
  const auto& D = q.denominator;
  return interval_max(A(0, 0), 0.5 * (A(0, 1) + A(1, 0)), A(1, 1), D(0, 0), 0.5 * (D(0, 1) + D(1, 0)), D(1, 1), a, b);
}

namespace detail {

inline Eigen::VectorXd project(const CovariateBox& box, Eigen::VectorXd x) {
  for (int l = 0; l < box.dim(); ++l) x(l) = std::clamp(x(l), box.bounds[l].lower, box.bounds[l].upper);
  return x;
}

/// Box-projected Nelder-Mead ascent from `start`, at most `budget` evaluations.
inline BoxMax nelder_mead_ascent(const QuadraticRatio& q, const CovariateBox& box, const Eigen::VectorXd& start,
                                 int budget) {
  const int p = box.dim();
  auto value = [&](const Eigen::VectorXd& x) { return ratio_at(q, x); };
  std::vector<Eigen::VectorXd> simplex{project(box, start)};
  for (int l = 0; l < p; ++l) {
    Eigen::VectorXd v = simplex[0];
    const double step = 0.05 * box.bounds[l].width();
    v(l) = v(l) + step <= box.bounds[l].upper ? v(l) + step : v(l) - step;
    simplex.push_back(project(box, v));
  }
  std::vector<double> f;
  for (const auto& v : simplex) f.push_back(value(v));
  int evals = static_cast<int>(f.size());

  double diameter_floor = 0.0;
  for (const Bound& b : box.bounds) diameter_floor = std::max(diameter_floor, b.width());
  diameter_floor *= 1e-12;

  std::vector<int> order(simplex.size());
  while (evals < budget) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return f[i] > f[j]; });
    const int best = order.front(), worst = order.back(), second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).lpNorm<Eigen::Infinity>());
    if (f[best] - f[worst] <= 1e-15 * std::abs(f[best]) && diameter <= diameter_floor) break;
    if (diameter == 0.0) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(p);
    for (int i : order)
      if (i != worst) centroid += simplex[i];
    centroid /= p;

    const Eigen::VectorXd reflected = project(box, centroid + (centroid - simplex[worst]));
    const double fr = value(reflected);
    ++evals;
    if (fr > f[best]) {
      const Eigen::VectorXd expanded = project(box, centroid + 2.0 * (centroid - simplex[worst]));
      const double fe = value(expanded);
      ++evals;
      if (fe > fr) {
        simplex[worst] = expanded;
        f[worst] = fe;
      } else {
        simplex[worst] = reflected;
        f[worst] = fr;
      }
      continue;
    }
    if (fr > f[second]) {
      simplex[worst] = reflected;
      f[worst] = fr;
      continue;
    }
    const bool outside = fr > f[worst];
    const Eigen::VectorXd contracted =
        outside ? project(box, centroid + 0.5 * (reflected - centroid)) : project(box, centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = value(contracted);
    ++evals;
    if (fc > std::max(fr, f[worst])) {
      simplex[worst] = contracted;
      f[worst] = fc;
      continue;
    }
    for (int i : order) {
      if (i == best) continue;
      simplex[i] = project(box, simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      f[i] = value(simplex[i]);
      ++evals;
    }
  }
  const auto it = std::max_element(f.begin(), f.end());
  return {*it, simplex[static_cast<size_t>(it - f.begin())]};
}

}  // namespace detail

/// Seed of the pseudo-random interior starts in sup_box.
inline constexpr std::uint64_t kMultiStartSeed = 0x5C7B0C5ULL;
inline constexpr int kMultiStartRandomPoints = 32;
inline constexpr int kMultiStartBudget = 500;

/// Multi-start bounded local maximization over a finite box. Starts: every
/// corner, the center, and 32 keyed pseudo-random interior points. Exact for
/// p = 1 (delegates to sup_interval); a best-effort local optimum otherwise.
inline BoxMax sup_box(const QuadraticRatio& q, const CovariateBox& box) {
  validate_box(box);
  if (box.dim() < 1 || q.p() != box.dim())
    throw Error(Errc::InvalidArgument, "box dimension must match the quadratic forms");
  if (!box.is_finite()) throw Error(Errc::UnboundedBox, "sup_box needs finite bounds; use sup_unbounded");
  if (box.dim() == 1) {
    const IntervalMax r = sup_interval(q, box.bounds[0].lower, box.bounds[0].upper);
    return {r.value, Eigen::VectorXd::Constant(1, r.argmax)};
  }
  const int p = box.dim();
  std::vector<Eigen::VectorXd> starts;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
    Eigen::VectorXd corner(p);
    for (int l = 0; l < p; ++l) corner(l) = (mask >> l) & 1U ? box.bounds[l].upper : box.bounds[l].lower;
    starts.push_back(corner);
  }
  starts.push_back(box.center());
  RandomStream stream(StreamKey{kMultiStartSeed, 0, 0});
  for (int s = 0; s < kMultiStartRandomPoints; ++s) {
    Eigen::VectorXd x(p);
    for (int l = 0; l < p; ++l) x(l) = box.bounds[l].lower + stream.uniform() * box.bounds[l].width();
    starts.push_back(x);
  }
  BoxMax best{-1.0, box.center()};
  for (const auto& start : starts) {
    const double v0 = ratio_at(q, start);
    if (v0 > best.value) best = {v0, start};
    const BoxMax local = detail::nelder_mead_ascent(q, box, start, kMultiStartBudget);
    if (local.value > best.value) best = local;
  }
  best.value = std::max(best.value, 0.0);
  return best;
}

/// Largest eigenvalue of a small symmetric matrix; closed form up to 2x2.
inline double largest_symmetric_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& s) {
  if (s.rows() == 1) return s(0, 0);
  if (s.rows() == 2) {
    const double half_trace = 0.5 * (s(0, 0) + s(1, 1));
    const double half_diff = 0.5 * (s(0, 0) - s(1, 1));
    const double off = 0.5 * (s(0, 1) + s(1, 0));
    return half_trace + std::hypot(half_diff, off);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(s.rows() - 1);
}

/// Largest root of det(A - lambda D) = 0 via L^{-1} A L^{-T} with D = L L'.
/// This is the supremum of R over the whole space, including directions
/// whose first coordinate is zero.
inline double sup_unbounded(const QuadraticRatio& q) {
  const Eigen::LLT<Eigen::MatrixXd> llt(q.denominator);
  if (llt.info() != Eigen::Success) throw Error(Errc::InvalidArgument, "denominator form must be positive definite");
  Eigen::MatrixXd c = llt.matrixL().solve(q.numerator);
  c = llt.matrixL().solve(c.transpose()).eval();
  return std::max(largest_symmetric_eigenvalue(0.5 * (c + c.transpose())), 0.0);
}

/// Covariate point attaining sup_unbounded, or an empty vector when the
/// maximizing direction has (numerically) zero first coordinate.
inline Eigen::VectorXd unbounded_argmax(const QuadraticRatio& q) {
  const Eigen::LLT<Eigen::MatrixXd> llt(q.denominator);
  if (llt.info() != Eigen::Success) throw Error(Errc::InvalidArgument, "denominator form must be positive definite");
  Eigen::MatrixXd c = llt.matrixL().solve(q.numerator);
  c = llt.matrixL().solve(c.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c + c.transpose()));
  const Eigen::VectorXd v = llt.matrixU().solve(eig.eigenvectors().col(c.rows() - 1));
  if (std::abs(v(0)) <= 1e-12 * v.norm()) return {};
  return v.tail(v.size() - 1) / v(0);
}

}  // namespace sct
