#include <cmath>
#include <random>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "sct/classical_tests.hpp"
#include "sct/engine.hpp"
#include "test_support.hpp"

namespace sct {
namespace {

// F density written out independently of the library.
double f_density(double x, double d1, double d2) {
  const double log_c = std::lgamma(0.5 * (d1 + d2)) - std::lgamma(0.5 * d1) - std::lgamma(0.5 * d2) +
                       0.5 * d1 * std::log(d1 / d2);
  const double power = 0.5 * d1 - 1.0;
  const double log_x_term = power == 0.0 ? 0.0 : power * std::log(x);
  return std::exp(log_c + log_x_term - 0.5 * (d1 + d2) * std::log1p(d1 * x / d2));
}

double simpson(double (*f)(double, double, double), double a, double b, double d1, double d2, int n) {
  const double h = (b - a) / n;
  double s = f(a, d1, d2) + f(b, d1, d2);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h, d1, d2);
  return s * h / 3.0;
}

TEST(FDistribution, MedianOfEqualDegreesIsOne) {
  for (int d : {1, 3, 10, 244}) EXPECT_NEAR(f_quantile(d, d, 0.5), 1.0, 1e-10) << d;
}

TEST(FDistribution, QuantileIntegratesToLevel) {
  const double q = f_quantile(2, 244, 0.95);
  EXPECT_NEAR(q, 3.033, 5e-4);
  EXPECT_NEAR(simpson(f_density, 0.0, q, 2, 244, 20000), 0.95, 1e-10);
}

TEST(FDistribution, SquaredStudentT) {
  const boost::math::students_t t10(10);
  const double t = boost::math::quantile(t10, 0.975);
  EXPECT_NEAR(f_quantile(1, 10, 0.95), t * t, 1e-9 * t * t);
  EXPECT_NEAR(f_quantile(1, 10, 0.95), 4.9646, 1e-4);
}

TEST(FDistribution, AgreesWithBoost) {
  for (int d1 : {1, 2, 4, 7})
    for (int d2 : {3, 10, 50, 244, 2000})
      for (double prob : {0.01, 0.5, 0.9, 0.95, 0.99, 0.9999}) {
        const double expected = boost::math::quantile(boost::math::fisher_f(d1, d2), prob);
        EXPECT_NEAR(f_quantile(d1, d2, prob), expected, 1e-9 * expected) << d1 << "," << d2 << "," << prob;
      }
}

TEST(FDistribution, CdfRoundTrip) {
  for (int d1 : {1, 2, 5})
    for (int d2 : {5, 244})
      for (double prob = 0.05; prob < 1.0; prob += 0.1)
        EXPECT_NEAR(f_cdf(f_quantile(d1, d2, prob), d1, d2), prob, 1e-10);
}

TEST(FDistribution, RejectsBadArguments) {
  EXPECT_THROW(f_quantile(0, 5, 0.5), Error);
  EXPECT_THROW(f_quantile(2, 5, 1.0), Error);
  EXPECT_THROW(f_quantile(2, 5, 0.0), Error);
}

TEST(Pointwise, TwoResponsesAt244) {
  const double c = pointwise_constant(2, 244, 0.05);
  EXPECT_NEAR(c, 0.0249, 1e-4);
  // Relative saving against the whole-space constant 0.0360.
  EXPECT_NEAR((0.0360 - c) / 0.0360, 0.31, 0.005);
}

TEST(Pointwise, UnivariateIsSquaredT) {
  for (int nu : {5, 30, 244}) {
    const double t = boost::math::quantile(boost::math::students_t(nu), 0.975);
    EXPECT_NEAR(pointwise_constant(1, nu, 0.05), t * t / nu, 1e-10 * t * t / nu);
  }
}

FittedModels null_fit(const std::vector<int>& sizes, int p, int m, std::mt19937_64& rng) {
  return fit_models(validate_dataset(testing::null_dataset(sizes, p, m, rng)));
}

TEST(Roy, IdenticalGroupsGiveZero) {
  std::mt19937_64 rng(1);
  GroupedDataset d = testing::null_dataset({10, 10}, 1, 2, rng);
  d.groups[1] = d.groups[0];
  const FittedModels fit = fit_models(d);
  const RoyResult r = roy_two_sample(fit, 0.05, 1000, 3);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Roy, TransposedFormAgrees) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + trial % 3, m = 1 + trial % 4;
    const FittedModels fit = null_fit({10 + trial % 5, 12}, p, m, rng);
    const double a = roy_statistic_two_sample(fit), b = roy_statistic_transposed(fit);
    EXPECT_NEAR(a, b, 1e-10 * std::max(a, 1e-300)) << "trial " << trial;
  }
}

TEST(Roy, KSampleReducesToTwoSample) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const FittedModels fit = null_fit({9, 14}, 1 + trial % 2, 2, rng);
    const double a = roy_statistic_two_sample(fit), b = roy_statistic_k_sample(fit);
    EXPECT_NEAR(a, b, 1e-8 * a) << "trial " << trial;
  }
}

TEST(Roy, TwoSampleNullMatchesSimultaneousWholeSpace) {
  // For k = 2 over the whole space the simultaneous statistic is Roy's root,
  // so the two simulated null laws agree.
  std::mt19937_64 rng(4);
  const FittedModels fit = null_fit({20, 30}, 1, 2, rng);
  const auto roy = roy_null_sample(2, 2, fit.nu, 100000, 5);
  const auto sct = simulate_T(fit, ComparisonFamily::pairwise(2), CovariateBox::whole_space(1), 100000, 6).values;
  const auto cdf = [&](double t) {
    return static_cast<double>(std::upper_bound(sct.begin(), sct.end(), t) - sct.begin()) / sct.size();
  };
  const double n = roy.size();
  EXPECT_LT(testing::ks_statistic(roy, cdf), 1.6276 * std::sqrt(2.0 / n));
  EXPECT_EQ(roy_statistic_two_sample(fit), observed_statistic(fit, {1, 2}, CovariateBox::whole_space(1)).value);
}

TEST(Roy, UnivariateNullIsScaledF) {
  // m = 1: lambda = chi2_h / chi2_nu.
  const auto s = roy_null_sample(3, 1, 40, 100000, 7);
  const boost::math::fisher_f f(3, 40);
  EXPECT_LT(testing::ks_statistic(s, [&](double t) { return boost::math::cdf(f, t * 40.0 / 3.0); }),
            testing::ks_critical_1pct(s.size()));
}

TEST(Roy, KSampleNullCalibration) {
  std::mt19937_64 rng(8);
  int below = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const FittedModels fit = null_fit({10, 12, 15}, 1, 2, rng);
    below += roy_k_sample(fit, 0.05, 2000, 100 + trial).p_value < 0.05;
  }
  EXPECT_NEAR(static_cast<double>(below) / trials, 0.05, 0.03);
}

TEST(Roy, ErrorPaths) {
  std::mt19937_64 rng(9);
  const FittedModels three = null_fit({8, 8, 8}, 1, 1, rng);
  try {
    roy_two_sample(three, 0.05, 1000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotTwoGroups);
  }
  EXPECT_THROW(roy_null_sample(2, 3, 2, 10, 1), Error);
  const FittedModels two = null_fit({8, 8}, 1, 1, rng);
  EXPECT_THROW(roy_two_sample(two, 0.05, 100, 1), Error);
}

}  // namespace
}  // namespace sct
