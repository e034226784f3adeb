#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "werm/eumax.hpp"
#include "werm/kkt.hpp"
#include "werm/measure.hpp"
#include "werm/oracle.hpp"
#include "werm/risk.hpp"
#include "werm/riskmin.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

// Randomized invariant, oracle and iteration checks behind the `validate` subcommand.
namespace werm::validate {

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;      ///< worst observed value of the checked quantity
  double threshold = 0.0;  ///< bound the quantity is compared against
  int cases = 0;
  std::string detail;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  [[nodiscard]] bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

namespace detail {

/// Tracks max(value) for a check that passes while value <= threshold.
struct UpperBound {
  CheckResult result;

  UpperBound(std::string name, double threshold) {
    result.name = std::move(name);
    result.threshold = threshold;
  }
  void observe(double value, const std::string& where) {
    ++result.cases;
    if (!(value <= result.threshold)) {
      if (result.passed) result.detail = where;
      result.passed = false;
    }
    if (!(value <= result.worst)) result.worst = value;
  }
};

/// Tracks min(value) for a check that passes while value >= threshold.
struct LowerBound {
  CheckResult result;

  LowerBound(std::string name, double threshold) {
    result.name = std::move(name);
    result.threshold = threshold;
    result.worst = std::numeric_limits<double>::infinity();
  }
  void observe(double value, const std::string& where) {
    ++result.cases;
    if (!(value >= result.threshold)) {
      if (result.passed) result.detail = where;
      result.passed = false;
    }
    if (!(value >= result.worst)) result.worst = value;
  }
};

struct Fixture {
  ProbSpace space;
  WeightingMeasure measure;
  std::vector<double> x;
  std::vector<double> y;
};

inline ProbSpace random_space(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) total += (v = 0.1 + unit(rng));
  std::vector<State> states(n);
  for (std::size_t i = 0; i < n; ++i) states[i] = {p[i] / total, std::exp(-0.3 + 0.6 * normal(rng))};
  return ProbSpace::from_unsorted(std::move(states));
}

inline WeightingMeasure random_measure(std::mt19937_64& rng, std::size_t max_atoms) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(1, max_atoms);
  std::vector<Atom> atoms(count(rng));
  double total = 0.0;
  for (auto& a : atoms) total += (a.weight = 0.1 + unit(rng));
  for (auto& a : atoms) {
    a.exponent = 0.3 + 3.7 * unit(rng);
    a.weight /= total;
  }
  return WeightingMeasure(std::move(atoms));
}

inline std::vector<double> random_payoff(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline Fixture random_fixture(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> states(2, 40);
  auto space = random_space(rng, states(rng));
  auto measure = random_measure(rng, 5);
  const std::size_t n = space.size();
  return {std::move(space), std::move(measure), random_payoff(rng, n, 0.5, 3.0), random_payoff(rng, n, 0.5, 3.0)};
}

inline double sup_distance(const Payoff& a, const Payoff& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline UtilityFunction utility_for(std::uint64_t seed) {
  switch (seed % 3) {
    case 0: return UtilityFunction::log();
    case 1: return UtilityFunction::power(0.5);
    default: return UtilityFunction::power(2.0);
  }
}

}  // namespace detail

/**
 * Axioms and calculus identities of h on randomized fixtures: cash
 * additivity, monotonicity, additivity over independent sums, strict
 * convexity, ordering in the exponent, the Gateaux derivative, the gradient
 * inequality and E[-h'(X)] = 1.
 */
inline std::vector<CheckResult> invariant_suite(std::uint64_t seed, int fixtures = 50) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  detail::UpperBound cash("cash_additivity", 1e-12);
  detail::UpperBound monotone("monotonicity", 0.0);
  detail::UpperBound independent("independent_additivity", 1e-10);
  detail::LowerBound convex("strict_convexity_gap", 1e-12);
  detail::UpperBound ordering("exponent_ordering", 0.0);
  detail::UpperBound gateaux("gateaux_relative_error", 1e-4);
  detail::LowerBound gradient("gradient_inequality_slack", -1e-10);
  detail::UpperBound density("marginal_density_mass", 1e-10);

  for (int f = 0; f < fixtures; ++f) {
    const std::string where = "fixture " + std::to_string(f);
    auto fx = detail::random_fixture(rng);
    const auto& space = fx.space;
    const auto& m = fx.measure;
    const std::size_t n = space.size();
    const double hx = werm(m, space, fx.x);
    const double hy = werm(m, space, fx.y);

    const double c = 4.0 * unit(rng) - 1.0;
    std::vector<double> shifted = fx.x;
    for (auto& v : shifted) v += c;
    cash.observe(std::abs(werm(m, space, shifted) - (hx - c)), where);

    std::vector<double> larger = fx.x;
    for (auto& v : larger) v += unit(rng) < 0.3 ? 0.0 : unit(rng);
    monotone.observe(werm(m, space, larger) - hx, where);

    auto first = detail::random_space(rng, 2 + f % 12);
    auto second = detail::random_space(rng, 2 + (f * 7) % 11);
    const auto product = product_space(first, second);
    const auto px = detail::random_payoff(rng, first.size(), 0.0, 3.0);
    const auto py = detail::random_payoff(rng, second.size(), 0.0, 3.0);
    const double joint = werm(m, product.space, product.lift_sum(px, py));
    independent.observe(std::abs(joint - werm(m, first, px) - werm(m, second, py)), where);

    const double theta = 0.1 + 0.8 * unit(rng);
    std::vector<double> mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = theta * fx.x[i] + (1.0 - theta) * fx.y[i];
    convex.observe(theta * hx + (1.0 - theta) * hy - werm(m, space, mix), where);

    const double a = 0.2 + 3.0 * unit(rng);
    const double b = a + 0.05 + 2.0 * unit(rng);
    ordering.observe(entropic_risk(a, space, fx.x) - entropic_risk(b, space, fx.x), where);

    // One-signed directions keep E[h'(X) Y] away from zero, so the relative error is meaningful.
    std::vector<double> direction = detail::random_payoff(rng, n, 0.1, 1.0);
    if (unit(rng) < 0.5) {
      for (auto& v : direction) v = -v;
    }
    const std::vector<double> steps = {1e-3, 1e-4, 1e-5, 1e-6};
    gateaux.observe(gateaux_derivative_check(m, space, Payoff(fx.x), direction, steps).relative_error, where);

    const auto marginal = marginal_risk_density(m, space, fx.x);
    std::vector<double> linear(n);
    std::vector<double> negated(n);
    for (std::size_t i = 0; i < n; ++i) {
      linear[i] = marginal[i] * (fx.y[i] - fx.x[i]);
      negated[i] = -marginal[i];
    }
    gradient.observe(hy - hx - expectation(space, linear), where);
    density.observe(std::abs(expectation(space, negated) - 1.0), where);
  }
  return {cash.result,    monotone.result, independent.result, convex.result,
          ordering.result, gateaux.result,  gradient.result,    density.result};
}

/**
 * Cross-checks the main solvers against the brute-force oracles on random
 * instances of at most 8 states and 5 atoms, and records KKT residuals of
 * every returned solution.
 */
inline std::vector<CheckResult> oracle_suite(std::uint64_t seed, int instances = 100) {
  detail::UpperBound risk_match("riskmin_vs_oracle_sup", 1e-6);
  detail::UpperBound eu_match("eumax_vs_oracle_sup", 1e-6);
  detail::UpperBound risk_kkt("riskmin_kkt", 1e-8);
  detail::UpperBound eu_kkt("eumax_kkt", 1e-8);
  detail::UpperBound oracle_kkt("oracle_riskmin_kkt", 1e-6);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < instances; ++k) {
    const std::uint64_t instance_seed = seed * 1000003ULL + static_cast<std::uint64_t>(k);
    const std::string where = "instance seed " + std::to_string(instance_seed);
    const auto inst = oracle::random_instance(instance_seed);
    const auto& space = inst.space;
    const auto& m = inst.measure;

    const auto rm = solve_risk_min(m, space, inst.budget);
    const auto brute_rm = oracle::brute_force_risk_min(m, space, inst.budget);
    risk_match.observe(detail::sup_distance(rm.payoff, brute_rm), where);
    risk_kkt.observe(rm.kkt_residual, where);
    oracle_kkt.observe(kkt_check_riskmin(m, space, brute_rm, rm.lambda_star), where);

    const auto u = detail::utility_for(instance_seed);
    const auto bounds = oracle::oracle_bounds(m, space, u, inst.budget);
    const double gamma = bounds.gamma1 + (0.25 + 0.5 * unit(rng)) * (bounds.gamma2 - bounds.gamma1);
    const auto eu = mu_search(m, space, u, inst.budget, gamma);
    const auto brute_eu = oracle::brute_force_eu_max(m, space, u, inst.budget, gamma);
    eu_match.observe(detail::sup_distance(eu.payoff, brute_eu), where + " (" + u.name() + ")");
    eu_kkt.observe(eu.kkt_residual, where);
  }
  return {risk_match.result, eu_match.result, risk_kkt.result, eu_kkt.result, oracle_kkt.result};
}

/**
 * Monotone iteration on random (multiplier, instance) pairs: iterates are
 * nondecreasing per state, and the divergence guard fires below
 * 1/E[rho] (risk minimization) and mu/E[rho] (utility maximization).
 */
inline std::vector<CheckResult> iteration_suite(std::uint64_t seed, int pairs = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  detail::UpperBound rm_monotone("riskmin_iterates_decrease_by", 0.0);
  detail::UpperBound eu_monotone("eumax_iterates_decrease_by", 0.0);
  detail::UpperBound rm_guard("riskmin_divergence_missed", 0.0);
  detail::UpperBound eu_guard("eumax_divergence_missed", 0.0);
  FixedPointConfig long_run;
  long_run.max_iter = 200000;

  for (int k = 0; k < pairs; ++k) {
    const std::uint64_t instance_seed = seed * 7919ULL + static_cast<std::uint64_t>(k);
    const std::string where = "instance seed " + std::to_string(instance_seed);
    const auto inst = oracle::random_instance(instance_seed, 8, 5);
    const auto& space = inst.space;
    const auto& m = inst.measure;
    const double threshold = 1.0 / space.mean_sdf();

    auto tracker = [](double& worst) {
      return [&worst, previous = std::vector<double>()](int, const Payoff& x) mutable {
        if (!previous.empty()) {
          for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, previous[i] - x[i]);
        }
        previous.assign(x.values().begin(), x.values().end());
      };
    };

    double drop = 0.0;
    const double lambda = threshold * (1.05 + 2.0 * unit(rng));
    solve_fixed_point(m, space, lambda, long_run, tracker(drop));
    rm_monotone.observe(drop, where);

    const auto u = detail::utility_for(instance_seed);
    const double mu = 0.2 + 3.0 * unit(rng);
    double eu_drop = 0.0;
    const double eu_lambda = mu * threshold + unconstrained_eu(m, u, space, inst.budget).lambda * (0.5 + unit(rng));
    solve_fixed_point_eu(m, space, u, mu, eu_lambda, long_run, tracker(eu_drop));
    eu_monotone.observe(eu_drop, where);

    const double below = 0.3 + 0.6 * unit(rng);
    const auto diverging = solve_fixed_point(m, space, below * threshold, long_run);
    rm_guard.observe(diverging.status == FixedPointStatus::diverged ? 0.0 : 1.0, where);
    const auto eu_diverging = solve_fixed_point_eu(m, space, u, mu, below * mu * threshold, long_run);
    eu_guard.observe(eu_diverging.status == FixedPointStatus::diverged ? 0.0 : 1.0, where);
  }
  return {rm_monotone.result, eu_monotone.result, rm_guard.result, eu_guard.result};
}

inline SuiteReport run_validation(std::uint64_t seed) {
  SuiteReport report;
  report.seed = seed;
  for (auto& c : invariant_suite(seed)) report.checks.push_back(std::move(c));
  for (auto& c : oracle_suite(seed)) report.checks.push_back(std::move(c));
  for (auto& c : iteration_suite(seed)) report.checks.push_back(std::move(c));
  return report;
}

}  // namespace werm::validate
