#pragma once

#include <cstdint>
#include <vector>

#include "sct/engine.hpp"
#include "sct/tube.hpp"

namespace sct {

struct PairComparison {
  Pair pair;
  double statistic = 0.0;  // t_ij
  Eigen::VectorXd argmax;  // where t_ij is attained (empty if not attained)
  double p_value = 1.0;    // adjusted
  bool reject = false;     // t_ij >= c_hat
  std::vector<SignificanceRegion> regions;  // one per response, p = 1 finite boxes only
};

struct ComparisonReport {
  ComparisonFamily family;
  CovariateBox box;
  std::uint64_t seed = 0;
  CriticalConstantResult critical;
  std::vector<PairComparison> pairs;
};

struct CompareOptions {
  SimulationOptions simulation;
  int region_resolution = 201;
};

/// Critical constant, adjusted p-values, reject flags and, for one covariate
/// over a finite range, per-response significance regions.
inline ComparisonReport compare(const FittedModels& fit, const ComparisonFamily& family, const CovariateBox& box,
                                double alpha, std::size_t r, std::uint64_t seed, const CompareOptions& options = {}) {
  require_nondegenerate(fit);
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0, 1)");
  if (static_cast<double>(r) * alpha < 10.0) throw Error(Errc::TooFewReplicates, "need r * alpha >= 10");
  const SimulatedSample sample = simulate_T(fit, family, box, r, seed, options.simulation);

  ComparisonReport report;
  report.family = family;
  report.box = box;
  report.seed = seed;
  report.critical = critical_constant(sample, alpha);
  const double c = report.critical.c_hat;
  const bool regions = fit.p == 1 && box.is_finite();
  for (const AdjustedPValue& adj : adjusted_p_values(fit, family, box, sample)) {
    PairComparison pc;
    pc.pair = adj.pair;
    pc.statistic = adj.statistic;
    pc.argmax = observed_statistic(fit, adj.pair, box).argmax;
    pc.p_value = adj.p_value;
    pc.reject = adj.statistic >= c;
    if (regions)
      for (int q = 1; q <= fit.m; ++q)
        pc.regions.push_back(significance_region(fit, adj.pair, c, q, box, options.region_resolution));
    report.pairs.push_back(std::move(pc));
  }
  return report;
}

}  // namespace sct
