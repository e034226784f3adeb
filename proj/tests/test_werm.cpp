#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "werm/errors.hpp"
#include "werm/measure.hpp"
#include "werm/risk.hpp"
#include "werm/statespace.hpp"
#include "werm/validate.hpp"

using namespace werm;

namespace {

ProbSpace three_states() { return ProbSpace({{0.2, 0.6}, {0.5, 1.0}, {0.3, 1.7}}); }

// Independent plain-sum entropic risk.
double entropic_by_hand(double a, const std::vector<double>& p, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::exp(-a * x[i]);
  return std::log(s) / a;
}

}  // namespace

TEST(WeightingMeasure, CanonicalForm) {
  const WeightingMeasure m({{3.0, 0.25}, {1.0, 0.5}, {3.0, 0.25}});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.a0(), 1.0);
  EXPECT_DOUBLE_EQ(m.a1(), 3.0);
  EXPECT_DOUBLE_EQ(m.atoms()[1].weight, 0.5);
  EXPECT_THROW(WeightingMeasure({{1.0, 0.5}}), DomainError);
  EXPECT_THROW(WeightingMeasure({{-1.0, 1.0}}), DomainError);
  EXPECT_THROW(WeightingMeasure(std::vector<Atom>{}), DomainError);
}

TEST(WeightingMeasure, UniformGrid) {
  const auto m = WeightingMeasure::uniform_grid(2.0, 3.0, 11);
  ASSERT_EQ(m.size(), 11u);
  EXPECT_DOUBLE_EQ(m.atoms()[5].exponent, 2.5);
  double total = 0.0;
  for (const auto& a : m.atoms()) total += a.weight;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_EQ(WeightingMeasure::uniform_grid(2.0, 2.0, 5).size(), 1u);
}

// [DERIVED] plain-sum formula for the entropic risk and its weighted average.
TEST(Werm, MatchesHandSum) {
  const auto s = three_states();
  const std::vector<double> x{2.0, 0.5, 1.25};
  const std::vector<double> p{0.2, 0.5, 0.3};
  EXPECT_NEAR(entropic_risk(1.5, s, Payoff(x)), entropic_by_hand(1.5, p, x), 1e-15);
  const WeightingMeasure m({{1.0, 0.3}, {4.0, 0.7}});
  EXPECT_NEAR(werm::werm(m, s, Payoff(x)), 0.3 * entropic_by_hand(1.0, p, x) + 0.7 * entropic_by_hand(4.0, p, x), 1e-15);
  EXPECT_NEAR(cara_certainty_equivalent(m, s, Payoff(x)), -werm::werm(m, s, Payoff(x)), 0.0);
}

TEST(Werm, ConstantPayoffIsMinusConstant) {
  const auto m = WeightingMeasure::uniform_grid(0.5, 4.0, 7);
  EXPECT_NEAR(werm::werm(m, three_states(), Payoff::constant(3, 2.5)), -2.5, 1e-14);
}

// [DERIVED] h_a of a Bernoulli(p) payoff X in {0, 1}: log(1 - p + p e^{-a}) / a.
TEST(Werm, BernoulliClosedForm) {
  const ProbSpace s({{0.7, 0.9}, {0.3, 1.2}});
  const Payoff x(std::vector<double>{1.0, 0.0});
  for (double a : {0.1, 1.0, 7.0}) {
    EXPECT_NEAR(entropic_risk(a, s, x), std::log(0.3 + 0.7 * std::exp(-a)) / a, 1e-15);
  }
}

TEST(Werm, LargePayoffsDoNotOverflow) {
  const auto s = three_states();
  const Payoff x(std::vector<double>{1e4, 2e4, 5e3});
  const double h = entropic_risk(3.0, s, x);
  EXPECT_TRUE(std::isfinite(h));
  EXPECT_NEAR(h, -5e3 + std::log(0.3) / 3.0, 1e-9);
}

TEST(MarginalDensity, HasUnitMass) {
  const auto s = three_states();
  const WeightingMeasure m({{0.7, 0.4}, {2.0, 0.6}});
  const auto d = marginal_risk_density(m, s, Payoff(std::vector<double>{3.0, 1.0, 0.2}));
  double mass = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) mass -= s.probability(i) * d[i];
  EXPECT_NEAR(mass, 1.0, 1e-15);
  // larger payoff, smaller density
  EXPECT_LT(-d[0], -d[1]);
  EXPECT_LT(-d[1], -d[2]);
}

TEST(Psi, InverseRoundTrip) {
  const WeightingMeasure m({{0.5, 0.2}, {2.0, 0.5}, {6.0, 0.3}});
  const std::vector<double> varphi{0.4, 0.1, 0.02};
  for (double y : {-3.0, -0.1, 0.0, 0.7, 4.0, 25.0}) {
    const double z = psi(m, varphi, y);
    EXPECT_NEAR(psi_inverse(m, varphi, z), y, 1e-12 * (1.0 + std::abs(y))) << y;
  }
  // far tails, checked relatively
  for (double z : {1e-200, 1e-12, 1e6, 1e200}) {
    const double y = psi_inverse(m, varphi, z);
    EXPECT_NEAR(std::log(psi(m, varphi, y)), std::log(z), 1e-12 * (1.0 + std::abs(std::log(z)))) << z;
  }
  EXPECT_THROW(psi_inverse(m, varphi, 0.0), DomainError);
  EXPECT_THROW(psi(m, std::vector<double>{1.0}, 0.0), DimensionError);
}

TEST(Psi, SlopeBoundedByExtremeExponents) {
  const WeightingMeasure m({{0.5, 0.2}, {2.0, 0.5}, {6.0, 0.3}});
  const PsiFunction p(m, {0.0, -1.0, -2.0});
  for (double y : {-5.0, 0.0, 3.0, 40.0}) {
    const double slope = p.derivative(y) / p(y);
    EXPECT_LE(slope, -0.5 + 1e-12);
    EXPECT_GE(slope, -6.0 - 1e-12);
  }
}

// [DERIVED] E[h'(X) Y] against forward difference quotients.
TEST(Gateaux, AgreesWithFiniteDifference) {
  const auto s = three_states();
  const WeightingMeasure m({{1.0, 0.5}, {3.0, 0.5}});
  const Payoff x(std::vector<double>{1.0, 0.6, 0.3});
  const std::vector<double> y{0.4, 0.9, 0.2};
  const std::vector<double> steps{1e-3, 1e-4, 1e-5, 1e-6};
  const auto r = gateaux_derivative_check(m, s, x, y, steps);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.relative_error, 1e-4);
}

// Randomized invariant fixtures, two seeds.
TEST(Invariants, SuitePasses) {
  for (std::uint64_t seed : {1u, 2u}) {
    for (const auto& c : validate::invariant_suite(seed, 50)) {
      EXPECT_TRUE(c.passed) << c.name << " worst=" << c.worst << " " << c.detail;
      EXPECT_GE(c.cases, 50) << c.name;
    }
  }
}
