#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "werm/errors.hpp"
#include "werm/oracle.hpp"
#include "werm/validate.hpp"

using namespace werm;

// [DERIVED] two states, one atom, both funded: a (X1 - X2) = log(rho2 / rho1)
// and p1 rho1 X1 + p2 rho2 X2 = x.
TEST(Oracle, TwoStateEntropicByHand) {
  const double p1 = 0.4, p2 = 0.6, r1 = 0.8, r2 = 1.3, a = 1.7, x = 2.0;
  const ProbSpace space({{p1, r1}, {p2, r2}});
  const double gap = std::log(r2 / r1) / a;
  const double x2 = (x - p1 * r1 * gap) / (p1 * r1 + p2 * r2);
  const auto sol = oracle::brute_force_risk_min(WeightingMeasure::single(a), space, x);
  EXPECT_NEAR(sol[0], x2 + gap, 1e-9);
  EXPECT_NEAR(sol[1], x2, 1e-9);
}

// [DERIVED] a small budget leaves the expensive state at zero:
// X1 = x / (p1 rho1) whenever a X1 <= log(rho2 / rho1).
TEST(Oracle, TwoStateCornerByHand) {
  const ProbSpace space({{0.5, 0.5}, {0.5, 4.0}});
  const double x = 0.1;
  const auto sol = oracle::brute_force_risk_min(WeightingMeasure::single(1.0), space, x);
  EXPECT_NEAR(sol[0], x / 0.25, 1e-9);
  EXPECT_EQ(sol[1], 0.0);
}

// [DERIVED] log utility without the cap: X = x / rho.
TEST(Oracle, UnpenalizedLogUtility) {
  const ProbSpace space({{0.2, 0.7}, {0.5, 1.0}, {0.3, 1.6}});
  const auto sol = oracle::brute_force_penalized_eu(WeightingMeasure::single(2.0), space, UtilityFunction::log(), 1.2,
                                                    0.0);
  for (std::size_t i = 0; i < space.size(); ++i) EXPECT_NEAR(sol[i], 1.2 / space.sdf(i), 1e-7);
}

TEST(Oracle, EuMaxHitsTheCap) {
  const auto inst = oracle::random_instance(5);
  const auto u = UtilityFunction::power(0.5);
  const auto b = oracle::oracle_bounds(inst.measure, inst.space, u, inst.budget);
  ASSERT_LT(b.gamma1, b.gamma2);
  const double gamma = 0.5 * (b.gamma1 + b.gamma2);
  const auto sol = oracle::brute_force_eu_max(inst.measure, inst.space, u, inst.budget, gamma);
  const std::vector<double> v(sol.values().begin(), sol.values().end());
  EXPECT_NEAR(oracle::detail::risk(inst.measure, inst.space, v), gamma, 1e-9);
  EXPECT_NEAR(budget(inst.space, sol), inst.budget, 1e-9);
  EXPECT_THROW(oracle::brute_force_eu_max(inst.measure, inst.space, u, inst.budget, b.gamma1 - 0.1), InfeasibleError);
}

TEST(Oracle, RejectsLargeSpaces) {
  std::vector<State> states(9, State{1.0 / 9.0, 1.0});
  const ProbSpace space(states);
  EXPECT_THROW(oracle::brute_force_risk_min(WeightingMeasure::single(1.0), space, 1.0), DimensionError);
  EXPECT_THROW(oracle::brute_force_risk_min(WeightingMeasure::single(1.0), ProbSpace({{1.0, 1.0}}), 0.0),
               DomainError);
}

TEST(RandomInstance, DeterministicAndInRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = oracle::random_instance(seed);
    const auto b = oracle::random_instance(seed);
    ASSERT_EQ(a.space.size(), b.space.size());
    EXPECT_EQ(a.budget, b.budget);
    EXPECT_GE(a.space.size(), 2u);
    EXPECT_LE(a.space.size(), oracle::max_states);
    EXPECT_LE(a.measure.size(), 5u);
    for (std::size_t i = 0; i < a.space.size(); ++i) EXPECT_EQ(a.space.sdf(i), b.space.sdf(i));
  }
}

// 100 seeded instances against both main solvers, plus KKT residuals.
TEST(OracleSuite, Passes) {
  for (const auto& c : validate::oracle_suite(1, 100)) {
    EXPECT_TRUE(c.passed) << c.name << " worst=" << c.worst << " " << c.detail;
    EXPECT_GE(c.cases, 100) << c.name;
  }
}
