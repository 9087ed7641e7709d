#pragma once

// Monte Carlo simulation of the pivotal statistic
//
//   T = max over (i,j) in the family, sup over the covariate box of
//       x'(G_i U_i - G_j U_j) W^{-1} (G_i U_i - G_j U_j)'x / x'(Delta_ij)x
//
// with U_i iid standard normal (p+1) x m, W ~ Wishart(I_m, nu), G_i the lower
// Cholesky factor of (X_i'X_i)^{-1} and Delta_ij = (X_i'X_i)^{-1} + (X_j'X_j)^{-1}.
// Its (1 - alpha) quantile is the critical constant of the simultaneous tubes.
//
// G_i is the triangular factor, not the symmetric square root: U_i is
// rotation invariant, so both give the same law.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sct/error.hpp"
#include "sct/model.hpp"
#include "sct/parallel.hpp"
#include "sct/quantile.hpp"
#include "sct/random.hpp"
#include "sct/sup_solver.hpp"

namespace sct {

/// Ordered pair of 1-based group indices.
struct Pair {
  int i = 0;
  int j = 0;
  auto operator<=>(const Pair&) const = default;
};

inline std::string to_string(const Pair& pr) { return "(" + std::to_string(pr.i) + "," + std::to_string(pr.j) + ")"; }

enum class FamilyKind { pairwise, vs_control, successive, custom };

inline std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::pairwise: return "pairwise";
    case FamilyKind::vs_control: return "vs_control";
    case FamilyKind::successive: return "successive";
    case FamilyKind::custom: return "custom";
  }
  return "custom";
}

struct ComparisonFamily {
  FamilyKind kind = FamilyKind::custom;
  int control = 0;  // 1-based, vs_control only
  std::vector<Pair> pairs;

  /// (i, j) for 1 <= i < j <= k; T is symmetric so each unordered pair once.
  static ComparisonFamily pairwise(int k) {
    ComparisonFamily f{FamilyKind::pairwise, 0, {}};
    for (int i = 1; i <= k; ++i)
      for (int j = i + 1; j <= k; ++j) f.pairs.push_back({i, j});
    return f;
  }
  /// (i, control) for every i != control.
  static ComparisonFamily vs_control(int k, int control) {
    ComparisonFamily f{FamilyKind::vs_control, control, {}};
    for (int i = 1; i <= k; ++i)
      if (i != control) f.pairs.push_back({i, control});
    return f;
  }
  /// (i, i+1) for 1 <= i < k.
  static ComparisonFamily successive(int k) {
    ComparisonFamily f{FamilyKind::successive, 0, {}};
    for (int i = 1; i < k; ++i) f.pairs.push_back({i, i + 1});
    return f;
  }
  static ComparisonFamily custom(std::vector<Pair> pairs) { return {FamilyKind::custom, 0, std::move(pairs)}; }
};

inline void validate_family(const ComparisonFamily& family, int k) {
  if (family.pairs.empty()) throw Error(Errc::EmptyFamily, "comparison family has no pairs");
  std::set<Pair> seen;
  std::set<Pair> unordered;
  for (const Pair& pr : family.pairs) {
    if (pr.i < 1 || pr.i > k || pr.j < 1 || pr.j > k)
      throw Error(Errc::InvalidFamily, "pair " + to_string(pr) + " outside 1.." + std::to_string(k));
    if (pr.i == pr.j) throw Error(Errc::InvalidFamily, "pair " + to_string(pr) + " compares a group with itself");
    if (!seen.insert(pr).second) throw Error(Errc::InvalidFamily, "duplicate pair " + to_string(pr));
    if (family.kind == FamilyKind::pairwise && !unordered.insert({std::min(pr.i, pr.j), std::max(pr.i, pr.j)}).second)
      throw Error(Errc::InvalidFamily, "pairwise family lists " + to_string(pr) + " in both orders");
  }
}

/// What a simulated sample was generated under.
struct SampleMeta {
  int nu = 0;
  int m = 0;
  int p = 0;
  std::vector<Pair> pairs;
  CovariateBox box;
  std::vector<Eigen::MatrixXd> gram_inv;

  bool operator==(const SampleMeta& o) const {
    if (nu != o.nu || m != o.m || p != o.p || pairs != o.pairs || !(box == o.box)) return false;
    if (gram_inv.size() != o.gram_inv.size()) return false;
    for (size_t g = 0; g < gram_inv.size(); ++g)
      if (gram_inv[g].rows() != o.gram_inv[g].rows() || gram_inv[g] != o.gram_inv[g]) return false;
    return true;
  }
};

struct SimulatedSample {
  std::vector<double> values;  // ascending
  std::size_t r = 0;
  std::uint64_t seed = 0;
  SampleMeta meta;
};

struct SimulationOptions {
  unsigned workers = 0;  // 0 = hardware concurrency
};

/// Supremum of a quadratic ratio over any valid box: the largest generalized
/// eigenvalue for the whole space, multi-start search for finite boxes.
/// Boxes mixing finite and infinite bounds are rejected.
inline BoxMax sup_over_box(const QuadraticRatio& q, const CovariateBox& box) {
  validate_box(box);
  if (box.dim() != q.p()) throw Error(Errc::InvalidArgument, "box dimension does not match the model's covariates");
  if (box.is_whole_space()) return {sup_unbounded(q), unbounded_argmax(q)};
  if (!box.is_finite()) throw Error(Errc::UnboundedBox, "boxes must be fully finite or the whole space");
  if (std::all_of(box.bounds.begin(), box.bounds.end(), [](const Bound& b) { return b.lower == b.upper; })) {
    const Eigen::VectorXd x = box.center();
    return {std::max(ratio_at(q, x), 0.0), x};
  }
  return sup_box(q, box);
}

namespace detail {

enum class RegionKind { whole_space, point, interval, box };

inline RegionKind classify(const CovariateBox& box) {
  validate_box(box);
  if (box.is_whole_space()) return RegionKind::whole_space;
  if (!box.is_finite()) throw Error(Errc::UnboundedBox, "boxes must be fully finite or the whole space");
  if (std::all_of(box.bounds.begin(), box.bounds.end(), [](const Bound& b) { return b.lower == b.upper; }))
    return RegionKind::point;
  return box.dim() == 1 ? RegionKind::interval : RegionKind::box;
}

/// Per-pair data that does not change across replicates.
struct PairPlan {
  int i = 0;  // 0-based
  int j = 0;
  Eigen::MatrixXd delta;
  Eigen::MatrixXd delta_chol_lower;
  Eigen::VectorXd point;  // x~ = (1, x) for point boxes
  double point_denominator = 0.0;
};

}  // namespace detail

/// Draws r replicates of T and returns them sorted. Replicate j depends only
/// on (seed, j), so the result is identical for any number of workers.
inline SimulatedSample simulate_T(const FittedModels& fit, const ComparisonFamily& family, const CovariateBox& box,
                                  std::size_t r, std::uint64_t seed, const SimulationOptions& options = {}) {
  require_nondegenerate(fit);
  validate_family(family, fit.k);
  if (r < 1) throw Error(Errc::TooFewReplicates, "need at least one replicate");
  if (box.dim() != fit.p) throw Error(Errc::InvalidArgument, "box dimension does not match the model's covariates");
  const detail::RegionKind region = detail::classify(box);

  const int rows = fit.p + 1;
  const int m = fit.m;
  std::vector<Eigen::MatrixXd> factor(static_cast<size_t>(fit.k));
  std::vector<char> used(static_cast<size_t>(fit.k), 0);
  std::vector<detail::PairPlan> plans;
  for (const Pair& pr : family.pairs) {
    detail::PairPlan plan;
    plan.i = pr.i - 1;
    plan.j = pr.j - 1;
    plan.delta = fit.delta(plan.i, plan.j);
    plan.delta_chol_lower = Eigen::LLT<Eigen::MatrixXd>(plan.delta).matrixL();
    if (region == detail::RegionKind::point) {
      plan.point.resize(rows);
      plan.point(0) = 1.0;
      plan.point.tail(fit.p) = box.center();
      plan.point_denominator = plan.point.dot(plan.delta * plan.point);
    }
    used[plan.i] = used[plan.j] = 1;
    plans.push_back(std::move(plan));
  }
  for (int g = 0; g < fit.k; ++g)
    if (used[g]) factor[g] = Eigen::LLT<Eigen::MatrixXd>(fit.gram_inv[g]).matrixL();

  SimulatedSample sample;
  sample.r = r;
  sample.seed = seed;
  sample.meta = {fit.nu, fit.m, fit.p, family.pairs, box, fit.gram_inv};
  sample.values.resize(r);

  parallel_for(r, options.workers, [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd wishart_lower(m, m);
    Eigen::MatrixXd u(rows, m);
    Eigen::MatrixXd ut(m, rows);
    std::vector<Eigen::MatrixXd> s(static_cast<size_t>(fit.k), Eigen::MatrixXd(rows, m));
    Eigen::MatrixXd diff(rows, m);
    Eigen::MatrixXd gram_small(std::min(rows, m), std::min(rows, m));
    Eigen::VectorXd proj(m);

    for (std::size_t rep = begin; rep < end; ++rep) {
      RandomStream w_stream(StreamKey{seed, rep, kWishartSubstream});
      bartlett_factor(w_stream, fit.nu, wishart_lower);
      for (int g = 0; g < fit.k; ++g) {
        if (!used[g]) continue;
        RandomStream u_stream(StreamKey{seed, rep, group_substream(g)});
        fill_normal(u_stream, u);
        // s_g = G_g U_g L^{-T}, so (s_i - s_j)(s_i - s_j)' = M W^{-1} M'.
        ut = u.transpose();
        wishart_lower.triangularView<Eigen::Lower>().solveInPlace(ut);
        s[g].noalias() = factor[g] * ut.transpose();
      }
      double t_max = 0.0;
      for (const auto& plan : plans) {
        diff.noalias() = s[plan.i] - s[plan.j];
        double value = 0.0;
        switch (region) {
          case detail::RegionKind::whole_space: {
            plan.delta_chol_lower.triangularView<Eigen::Lower>().solveInPlace(diff);
            if (rows <= m)
              gram_small.noalias() = diff * diff.transpose();
            else
              gram_small.noalias() = diff.transpose() * diff;
            value = largest_symmetric_eigenvalue(gram_small);
            break;
          }
          case detail::RegionKind::point: {
            proj.noalias() = diff.transpose() * plan.point;
            value = proj.squaredNorm() / plan.point_denominator;
            break;
          }
          case detail::RegionKind::interval: {
            const double a00 = diff.row(0).squaredNorm();
            const double a01 = diff.row(0).dot(diff.row(1));
            const double a11 = diff.row(1).squaredNorm();
            const auto& d = plan.delta;
            value = interval_max(a00, a01, a11, d(0, 0), d(0, 1), d(1, 1), box.bounds[0].lower, box.bounds[0].upper)
                        .value;
            break;
          }
          case detail::RegionKind::box: {
            value = sup_box(QuadraticRatio{diff * diff.transpose(), plan.delta}, box).value;
            break;
          }
        }
        t_max = std::max(t_max, value);
      }
      sample.values[rep] = t_max;
    }
  });
  std::sort(sample.values.begin(), sample.values.end());
  return sample;
}

struct CriticalConstantResult {
  double c_hat = 0.0;
  double alpha = 0.0;
  std::size_t r = 0;
  std::size_t rank = 0;             // 1-based order statistic used for c_hat
  Interval order_stat_interval;     // 99% interval for the true quantile
  Interval eb_coverage_interval;    // mean +- 3 s.e. of P{T < c_hat | c_hat}
  double eb_standard_error = 0.0;
};

/// c_hat = T_(ceil((1 - alpha) r)). Requires r * alpha >= 10.
inline CriticalConstantResult critical_constant(const SimulatedSample& sample, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  if (sample.values.empty() || static_cast<double>(sample.values.size()) * alpha < 10.0)
    throw Error(Errc::TooFewReplicates, "need r * alpha >= 10, have r = " + std::to_string(sample.values.size()));
  CriticalConstantResult out;
  out.alpha = alpha;
  out.r = sample.values.size();
  out.rank = quantile_rank(out.r, alpha);
  out.c_hat = sample.values[out.rank - 1];
  out.order_stat_interval = order_statistic_interval(sample.values, alpha);
  const CoverageLaw law = edwards_berry(out.r, alpha);
  out.eb_coverage_interval = law.three_sigma;
  out.eb_standard_error = law.standard_error;
  return out;
}

/// The plug-in numerator form (B_i - B_j)(nu Omega)^{-1}(B_i - B_j)' for a
/// pair of 0-based groups.
inline Eigen::MatrixXd contrast_form(const FittedModels& fit, int i, int j) {
  require_nondegenerate(fit);
  const Eigen::LLT<Eigen::MatrixXd> scatter(fit.pooled_scatter);
  if (scatter.info() != Eigen::Success) throw Error(Errc::DegenerateScatter, "pooled scatter is not positive definite");
  const Eigen::MatrixXd diff_t = (fit.bhat[i] - fit.bhat[j]).transpose();
  const Eigen::MatrixXd z = scatter.matrixL().solve(diff_t);
  return z.transpose() * z;
}

struct ObservedStatistic {
  double value = 0.0;
  Eigen::VectorXd argmax;  // empty when the supremum is not attained
};

inline void validate_pair(const FittedModels& fit, const Pair& pr) {
  if (pr.i < 1 || pr.i > fit.k || pr.j < 1 || pr.j > fit.k || pr.i == pr.j)
    throw Error(Errc::InvalidFamily, "invalid pair " + to_string(pr));
}

/// t_ij: sup over the box of x'(B_i - B_j)(nu Omega)^{-1}(B_i - B_j)'x / x'Delta_ij x.
inline ObservedStatistic observed_statistic(const FittedModels& fit, const Pair& pr, const CovariateBox& box) {
  validate_pair(fit, pr);
  const QuadraticRatio q{contrast_form(fit, pr.i - 1, pr.j - 1), fit.delta(pr.i - 1, pr.j - 1)};
  const BoxMax best = sup_over_box(q, box);
  return {best.value, best.argmax};
}

struct AdjustedPValue {
  Pair pair;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Westfall-Young style adjusted p-values p_ij = #{T > t_ij} / r.
inline std::vector<AdjustedPValue> adjusted_p_values(const FittedModels& fit, const ComparisonFamily& family,
                                                     const CovariateBox& box, const SimulatedSample& sample) {
  const SampleMeta expected{fit.nu, fit.m, fit.p, family.pairs, box, fit.gram_inv};
  if (!(sample.meta == expected))
    throw Error(Errc::MetaMismatch, "simulated sample was generated for a different design, family or box");
  std::vector<AdjustedPValue> out;
  for (const Pair& pr : family.pairs) {
    const double t = observed_statistic(fit, pr, box).value;
    const auto above = sample.values.end() - std::upper_bound(sample.values.begin(), sample.values.end(), t);
    out.push_back({pr, t, static_cast<double>(above) / static_cast<double>(sample.values.size())});
  }
  return out;
}

}  // namespace sct
