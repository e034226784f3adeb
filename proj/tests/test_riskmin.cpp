#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "werm/closed_form.hpp"
#include "werm/errors.hpp"
#include "werm/integral_system.hpp"
#include "werm/kkt.hpp"
#include "werm/oracle.hpp"
#include "werm/riskmin.hpp"
#include "werm/validate.hpp"

using namespace werm;

namespace {

const LogNormalSDF example_model(-0.5, 1.0);

ProbSpace small_space() { return ProbSpace({{0.3, 0.5}, {0.4, 1.0}, {0.3, 1.9}}); }

}  // namespace

// [PAPER] entropic a = 2, log rho ~ N(-0.5, 1), x = 1: gamma1(1) = -1.2489.
TEST(RiskMinClosedForm, PaperGamma1) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rm = entropic_risk_min_closed_form(2.0, example_model, 1.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(rm.gamma1, -1.2489, 1e-3);
  EXPECT_LT(secs, 1.0);
}

// [DERIVED] the closed form's budget and risk recomputed by quadrature.
TEST(RiskMinClosedForm, SelfConsistentByQuadrature) {
  for (double x : {0.25, 1.0, 3.0}) {
    const auto rm = entropic_risk_min_closed_form(2.0, example_model, x);
    const double price = numeric::normal_expectation(
        [&](double z) { return example_model.at(z) * rm.payoff(example_model.at(z)); });
    EXPECT_NEAR(price, x, 1e-10 * x);
    const double h = lognormal_werm(WeightingMeasure::single(2.0), example_model, [&](double r) { return rm.payoff(r); });
    EXPECT_NEAR(h, rm.gamma1, 1e-10);
  }
  EXPECT_THROW(entropic_risk_min_closed_form(2.0, example_model, 0.0), DomainError);
}

// [DERIVED] the log-normal (varphi, psi) system holds at the closed form.
TEST(RiskMinClosedForm, IntegralSystemResidual) {
  const auto m = WeightingMeasure::single(2.0);
  const auto rm = entropic_risk_min_closed_form(2.0, example_model, 1.0);
  EXPECT_LE(check_integral_system(m, example_model, {std::log(rm.c)}, rm.lambda).max_residual, 1e-6);
}

// [DERIVED] the iterative solver on a fine quantile grid approaches the closed form.
TEST(RiskMin, DiscreteMatchesClosedForm) {
  const auto m = WeightingMeasure::single(2.0);
  const auto space = discretize_lognormal(example_model, 2000);
  const auto report = solve_risk_min(m, space, 1.0);
  const auto rm = entropic_risk_min_closed_form(2.0, example_model, 1.0);
  EXPECT_NEAR(report.risk_value, rm.gamma1, 1e-4);
  EXPECT_NEAR(report.lambda_star, rm.lambda, 1e-3);
  EXPECT_LE(report.kkt_residual, 1e-8);
  EXPECT_LE(std::abs(report.budget_residual), 1e-9);
  EXPECT_LE(report.psi_residual, 1e-8);
}

// [DERIVED] equal SDF in every state: the minimizer is the riskless payoff x / rho.
TEST(RiskMin, FlatSdfGivesConstantPayoff) {
  const ProbSpace space({{0.25, 0.8}, {0.25, 0.8}, {0.5, 0.8}});
  const auto m = WeightingMeasure::uniform_grid(1.0, 3.0, 3);
  const auto report = solve_risk_min(m, space, 2.0);
  for (std::size_t i = 0; i < space.size(); ++i) EXPECT_NEAR(report.payoff[i], 2.5, 1e-9);
  EXPECT_NEAR(report.risk_value, -2.5, 1e-9);
}

TEST(RiskMin, PayoffNonincreasingInSdf) {
  // 20000 quantile states reach rho near 30, past the point where funding stops.
  const auto space = discretize_lognormal(example_model, 20000);
  const auto report = solve_risk_min(WeightingMeasure::uniform_grid(2.0, 3.0, 11), space, 1.0);
  for (std::size_t i = 1; i < space.size(); ++i) EXPECT_LE(report.payoff[i], report.payoff[i - 1]);
  EXPECT_DOUBLE_EQ(report.payoff[space.size() - 1], 0.0);  // expensive states are left unfunded
}

// [DERIVED] large budgets fund every state; cash additivity shifts the
// minimizer of a smaller budget by the extra cash over E[rho].
TEST(RiskMin, LargeBudgetIsCashShift) {
  const auto space = small_space();
  const WeightingMeasure m({{1.0, 0.5}, {2.5, 0.5}});
  const auto big = solve_risk_min(m, space, 50.0);
  const auto bigger = solve_risk_min(m, space, 60.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    EXPECT_NEAR(bigger.payoff[i] - big.payoff[i], 10.0 / space.mean_sdf(), 1e-8);
  }
  EXPECT_NEAR(big.lambda_star, 1.0 / space.mean_sdf(), 1e-12);
  EXPECT_LE(big.kkt_residual, 1e-8);
  EXPECT_LE(std::abs(bigger.budget_residual), 1e-8);
}

TEST(RiskMin, RisksDecreaseWithBudget) {
  const auto space = discretize_lognormal(example_model, 300);
  const auto m = WeightingMeasure::uniform_grid(2.0, 3.0, 4);
  double last = 0.0;
  for (double x : {0.25, 0.5, 1.0, 2.0}) {
    const double g = solve_risk_min(m, space, x).risk_value;
    EXPECT_LT(g, last);
    last = g;
  }
}

// [DERIVED] brute-force oracle on small spaces.
TEST(RiskMin, MatchesOracle) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const auto inst = oracle::random_instance(seed);
    const auto main = solve_risk_min(inst.measure, inst.space, inst.budget);
    const auto ref = oracle::brute_force_risk_min(inst.measure, inst.space, inst.budget);
    for (std::size_t i = 0; i < inst.space.size(); ++i) EXPECT_NEAR(main.payoff[i], ref[i], 1e-6) << seed;
    EXPECT_LE(main.kkt_residual, 1e-8) << seed;
  }
}

TEST(FixedPoint, IteratesAreMonotone) {
  const auto space = discretize_lognormal(example_model, 200);
  const auto m = WeightingMeasure::uniform_grid(2.0, 3.0, 5);
  Payoff previous = Payoff::zeros(space.size());
  bool monotone = true;
  const auto r = solve_fixed_point(m, space, 1.3, {}, [&](int, const Payoff& p) {
    for (std::size_t i = 0; i < p.size(); ++i) monotone = monotone && p[i] >= previous[i];
    previous = p;
  });
  EXPECT_TRUE(r.converged());
  EXPECT_TRUE(monotone);
}

TEST(FixedPoint, DivergesBelowThreshold) {
  const auto space = small_space();
  const auto m = WeightingMeasure::single(1.5);
  const auto r = solve_fixed_point(m, space, 0.8 / space.mean_sdf());
  EXPECT_EQ(r.status, FixedPointStatus::diverged);
  const auto ok = solve_fixed_point(m, space, 1.5 / space.mean_sdf());
  EXPECT_TRUE(ok.converged());
  EXPECT_THROW(solve_fixed_point(m, space, -1.0), DomainError);
}

TEST(FixedPoint, UniqueFromPerturbedStart) {
  const auto space = small_space();
  const WeightingMeasure m({{1.0, 0.5}, {2.5, 0.5}});
  const double lambda = 1.4;
  const auto base = solve_fixed_point(m, space, lambda);
  ASSERT_TRUE(base.converged());
  // A subsolution below the fixed point reaches the same limit.
  std::vector<double> start(space.size());
  for (std::size_t i = 0; i < start.size(); ++i) start[i] = 0.5 * base.payoff[i];
  const auto again = solve_fixed_point(m, space, lambda, {}, {}, Payoff(start));
  ASSERT_TRUE(again.converged());
  for (std::size_t i = 0; i < space.size(); ++i) EXPECT_NEAR(again.payoff[i], base.payoff[i], 1e-8);
  // So does a start above it, capped by a large constant.
  for (std::size_t i = 0; i < start.size(); ++i) start[i] = std::min(50.0, base.payoff[i] + 0.3 * (i + 1));
  const auto above = solve_fixed_point(m, space, lambda, {}, {}, Payoff(start));
  ASSERT_TRUE(above.converged());
  for (std::size_t i = 0; i < space.size(); ++i) EXPECT_NEAR(above.payoff[i], base.payoff[i], 1e-8);
}

TEST(Kkt, FlagsWrongMultiplier) {
  const auto space = small_space();
  const auto m = WeightingMeasure::single(2.0);
  const auto report = solve_risk_min(m, space, 1.0);
  EXPECT_LE(kkt_check_riskmin(m, space, report.payoff, report.lambda_star), 1e-8);
  EXPECT_GT(kkt_check_riskmin(m, space, report.payoff, 1.1 * report.lambda_star), 1e-3);
}

TEST(Iteration, SuitePasses) {
  for (const auto& c : validate::iteration_suite(3, 20)) EXPECT_TRUE(c.passed) << c.name << " " << c.detail;
}

TEST(RiskMin, RejectsBadInput) {
  const auto space = small_space();
  EXPECT_THROW(solve_risk_min(WeightingMeasure::single(1.0), space, -1.0), DomainError);
  SolverConfig bad;
  bad.fixed_point.tol_payoff = 0.0;
  EXPECT_THROW(solve_risk_min(WeightingMeasure::single(1.0), space, 1.0, bad), ConfigError);
}
