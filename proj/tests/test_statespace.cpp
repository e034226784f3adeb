#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "werm/errors.hpp"
#include "werm/numeric.hpp"
#include "werm/statespace.hpp"

using namespace werm;

TEST(ProbSpace, RejectsBadStates) {
  EXPECT_THROW(ProbSpace({}), DomainError);
  EXPECT_THROW(ProbSpace({{0.5, 1.0}, {0.4, 2.0}}), DomainError);
  EXPECT_THROW(ProbSpace({{0.5, 2.0}, {0.5, 1.0}}), DomainError);
  EXPECT_THROW(ProbSpace({{0.5, 1.0}, {0.5, -1.0}}), DomainError);
  EXPECT_THROW(ProbSpace({{1.0, std::nan("")}}), DomainError);
}

TEST(ProbSpace, FromUnsortedSortsBySdf) {
  const auto s = ProbSpace::from_unsorted({{0.2, 3.0}, {0.5, 1.0}, {0.3, 2.0}});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s.sdf(0), 1.0);
  EXPECT_DOUBLE_EQ(s.probability(0), 0.5);
  EXPECT_DOUBLE_EQ(s.sdf(2), 3.0);
  EXPECT_NEAR(s.mean_sdf(), 0.5 + 0.6 + 0.6, 1e-15);
}

TEST(ProbSpace, BudgetIsPricedExpectation) {
  const ProbSpace s({{0.25, 0.5}, {0.75, 1.5}});
  const Payoff x(std::vector<double>{2.0, 4.0});
  EXPECT_NEAR(budget(s, x), 0.25 * 0.5 * 2.0 + 0.75 * 1.5 * 4.0, 1e-15);
  EXPECT_THROW(budget(s, Payoff(std::vector<double>{1.0})), DimensionError);
}

TEST(Payoff, RejectsNonFinite) {
  EXPECT_THROW(Payoff(std::vector<double>{1.0, std::nan("")}), DomainError);
}

// [DERIVED] E[rho] = exp(b + sigma^2 / 2); the midpoint rule on the quantile
// grid converges to it, so the gap shrinks with n.
TEST(Discretize, MeanConvergesToLogNormalMean) {
  const LogNormalSDF model(-0.5, 1.0);
  const double exact = std::exp(-0.5 + 0.5);
  const double e1 = std::abs(discretize_lognormal(model, 1000).mean_sdf() - exact);
  const double e2 = std::abs(discretize_lognormal(model, 100000).mean_sdf() - exact);
  EXPECT_LT(e2, e1);
  EXPECT_LT(e2 / exact, 1e-3);
}

TEST(Discretize, EqualWeightsSortedStates) {
  const auto s = discretize_lognormal(LogNormalSDF(0.0, 0.5), 101);
  ASSERT_EQ(s.size(), 101u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(s.probability(i), 1.0 / 101.0);
  EXPECT_NEAR(s.sdf(50), 1.0, 1e-12);  // median state
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s.sdf(i - 1), s.sdf(i));
}

// [DERIVED] Boost's normal quantile is the independent reference.
TEST(Numeric, NormalQuantileMatchesBoost) {
  const boost::math::normal_distribution<double> n01;
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.75, 0.975, 1.0 - 1e-9}) {
    EXPECT_NEAR(numeric::normal_quantile(p), boost::math::quantile(n01, p), 1e-13 * (1.0 + std::abs(boost::math::quantile(n01, p))))
        << p;
  }
}

TEST(Numeric, NormalExpectationOfKnownMoments) {
  EXPECT_NEAR(numeric::normal_expectation([](double z) { return z * z; }), 1.0, 1e-12);
  EXPECT_NEAR(numeric::normal_expectation([](double z) { return std::exp(0.7 * z); }), std::exp(0.245), 1e-12);
}

TEST(Numeric, CompensatedSumKeepsSmallTerms) {
  numeric::CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-16);
  EXPECT_NEAR(s.value() - 1.0, 1e-13, 1e-15);
}

TEST(SdfCdf, LogNormalAndDiscreteAgree) {
  const LogNormalSDF model(-0.5, 1.0);
  const auto s = discretize_lognormal(model, 20000);
  for (double z : {0.1, 0.6, 1.0, 3.0}) EXPECT_NEAR(sdf_cdf(s, z), sdf_cdf(model, z), 1e-4);
  EXPECT_DOUBLE_EQ(sdf_cdf(model, 0.0), 0.0);
}

TEST(ProductSpace, LiftsIndependentSums) {
  const ProbSpace a({{0.3, 0.8}, {0.7, 1.1}});
  const ProbSpace b({{0.5, 0.9}, {0.5, 1.2}});
  const auto prod = product_space(a, b);
  EXPECT_EQ(prod.space.size(), 4u);
  EXPECT_NEAR(prod.space.mean_sdf(), a.mean_sdf() * b.mean_sdf(), 1e-15);
  const std::vector<double> x{1.0, 2.0};
  const std::vector<double> y{10.0, 20.0};
  const auto z = prod.lift_sum(x, y);
  double mean = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) mean += prod.space.probability(i) * z[i];
  EXPECT_NEAR(mean, (0.3 * 1.0 + 0.7 * 2.0) + 15.0, 1e-12);
}
