// Two groups, one covariate, two responses: simulate data that differ only in
// the first response's intercept, then compare them over the covariate range.

#include <cstdio>
#include <random>

#include "sct/sct.hpp"

int main() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> covariate(0.0, 10.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  sct::GroupedDataset data;
  data.p = 1;
  data.m = 2;
  for (int g = 0; g < 2; ++g) {
    const int n = g == 0 ? 40 : 55;
    sct::Group group{g == 0 ? "control" : "treated", Eigen::MatrixXd(n, 2), Eigen::MatrixXd(n, 2)};
    for (int r = 0; r < n; ++r) {
      const double x = covariate(rng);
      group.X(r, 0) = 1.0;
      group.X(r, 1) = x;
      group.Y(r, 0) = 2.0 + 0.5 * x + (g == 1 ? 1.5 : 0.0) + noise(rng);
      group.Y(r, 1) = -1.0 + 0.2 * x + noise(rng);
    }
    data.groups.push_back(group);
  }

  const sct::FittedModels fit = sct::fit_models(sct::validate_dataset(data));
  const auto family = sct::ComparisonFamily::pairwise(fit.k);
  const auto box = sct::CovariateBox::interval(0.0, 10.0);
  const sct::ComparisonReport report = sct::compare(fit, family, box, 0.05, 200'000, 42);

  std::printf("nu = %d, c = %.5f\n", fit.nu, report.critical.c_hat);
  for (const auto& pc : report.pairs) {
    std::printf("pair (%d,%d): t = %.5f, adjusted p = %.4f, %s\n", pc.pair.i, pc.pair.j, pc.statistic, pc.p_value,
                pc.reject ? "different" : "not distinguishable");
    for (const auto& region : pc.regions)
      for (const auto& iv : region.intervals)
        std::printf("  response %d: group %d %s on [%.3f, %.3f]\n", region.q, pc.pair.i,
                    iv.sign > 0 ? "higher" : "lower", iv.lower, iv.upper);
  }
  return 0;
}
