#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "werm/errors.hpp"
#include "werm/fixed_point.hpp"
#include "werm/numeric.hpp"
#include "werm/statespace.hpp"

namespace werm {

/// Tolerances for the multiplier searches layered over the fixed-point iterations.
struct SolverConfig {
  FixedPointConfig fixed_point;
  double budget_rel_tol = 1e-10; ///< |E[rho X] - x| <= budget_rel_tol * x at exit
  double risk_tol = 1e-9;        ///< |h(X) - gamma| at exit of the risk-cap search
  double bracket_limit = 1e12;   ///< largest factor a multiplier bracket may expand by
  int max_evaluations = 300;

  void validate() const {
    fixed_point.validate();
    if (!(budget_rel_tol > 0.0)) throw ConfigError("SolverConfig: budget_rel_tol must be positive");
    if (!(risk_tol > 0.0)) throw ConfigError("SolverConfig: risk_tol must be positive");
    if (!(bracket_limit > 1.0)) throw ConfigError("SolverConfig: bracket_limit must exceed 1");
    if (max_evaluations < 1) throw ConfigError("SolverConfig: max_evaluations must be positive");
  }
};

/// One converged evaluation of the price map lambda -> E[rho X^lambda].
struct LambdaTracePoint {
  double lambda;
  double price;
};

struct LambdaSearchResult {
  double lambda = 0.0;
  Payoff payoff;
  std::vector<double> log_varphi;
  double price = 0.0;
  int evaluations = 0;
  int iterations = 0;  ///< transform applications summed over all evaluations
  bool at_floor = false;  ///< price stayed below x down to lambda_min; payoff is the fixed point there
  std::vector<LambdaTracePoint> trace;
};

namespace detail {

/**
 * Solves price(lambda) = x for a nonincreasing price map on (lambda_min, inf).
 *
 * `solve(lambda, start)` returns the fixed point for that multiplier, started
 * from `start`. Fixed points are nonincreasing in lambda, so the solution at
 * the nearest larger multiplier already evaluated is a subsolution and is
 * used as the starting point. Divergent evaluations count as infinite price.
 * The bracket is searched in log(lambda), expanding from `guess` by
 * `initial_step` and doubling. `seed`, if given, starts evaluations that
 * have no solved multiplier above them.
 *
 * On finite spaces the price may stay bounded as lambda decreases to
 * lambda_min. If the walk toward lambda_min never brackets x, the fixed point
 * at lambda_min itself is returned with at_floor set, and the caller decides
 * how to spend the remaining budget.
 */
template <class Solve>
LambdaSearchResult search_lambda(Solve&& solve, const ProbSpace& space, double lambda_min, double guess, double x,
                                 const SolverConfig& cfg, double initial_step = 0.6931471805599453,
                                 const Payoff* seed = nullptr) {
  cfg.validate();
  if (!(x > 0.0)) throw DomainError("multiplier search: budget must be positive");
  std::map<double, FixedPointResult> solved;
  LambdaSearchResult out;

  auto evaluate = [&](double log_lambda) {
    const double lambda = std::exp(log_lambda);
    const auto above = solved.upper_bound(lambda);
    const Payoff start = above != solved.end() ? above->second.payoff
                         : seed != nullptr    ? *seed
                                              : Payoff::zeros(space.size());
    FixedPointResult res = solve(lambda, start);
    ++out.evaluations;
    out.iterations += res.iterations;
    if (!res.converged()) return std::numeric_limits<double>::infinity();
    const double price = budget(space, res.payoff);
    out.trace.push_back({lambda, price});
    solved.insert_or_assign(lambda, std::move(res));
    return price - x;
  };
  auto accept = [&](double, double f) { return std::isfinite(f) && std::abs(f) <= cfg.budget_rel_tol * x; };

  const double floor_log = std::log(lambda_min) + 1e-12;
  const double start_log = std::log(std::max(guess, lambda_min * (1.0 + 1e-6)));
  numeric::BracketSample lo{floor_log, std::numeric_limits<double>::infinity()};
  numeric::BracketSample hi{start_log, evaluate(start_log)};
  numeric::BracketSample root = hi;
  if (!accept(hi.x, hi.f)) {
    if (hi.f > 0.0) {
      lo = hi;
      const double limit_log = start_log + std::log(cfg.bracket_limit);
      double step = initial_step;
      while (true) {
        const double next = lo.x + step;
        if (next > limit_log) {
          throw ConfigError("multiplier search: bracket expansion exceeded the configured limit");
        }
        hi = {next, evaluate(next)};
        if (hi.f <= 0.0) break;
        lo = hi;
        step *= 2.0;
      }
    }
    if (!accept(hi.x, hi.f) && !std::isfinite(lo.f)) {
      // Walk down (geometrically toward lambda_min once steps get large)
      // looking for a finite lower end before falling back on the floor.
      double step = initial_step;
      while (hi.x - floor_log > 1e-7) {
        const double next = std::max(hi.x - step, floor_log + (hi.x - floor_log) / 16.0);
        step *= 2.0;
        const numeric::BracketSample probe{next, evaluate(next)};
        if (accept(probe.x, probe.f)) {
          hi = probe;
          break;
        }
        if (probe.f > 0.0) {
          lo = probe;
          break;
        }
        hi = probe;
      }
      if (!accept(hi.x, hi.f) && !std::isfinite(lo.f)) {
        FixedPointResult res = solve(lambda_min, solved.begin()->second.payoff);
        ++out.evaluations;
        out.iterations += res.iterations;
        if (!res.converged()) {
          throw NoConvergenceError("multiplier search: price stays below the budget down to the lower multiplier bound");
        }
        const double price = budget(space, res.payoff);
        out.trace.push_back({lambda_min, price});
        if (price < x) {
          out.at_floor = true;
          out.lambda = lambda_min;
          out.price = price;
          out.payoff = std::move(res.payoff);
          out.log_varphi = std::move(res.log_varphi);
          return out;
        }
        lo = {std::log(lambda_min), price - x};
        solved.insert_or_assign(lambda_min, std::move(res));
      }
    }
    root = accept(hi.x, hi.f) ? hi : numeric::bracketed_solve(evaluate, lo, hi, accept, 1e-15, cfg.max_evaluations);
  }

  auto it = solved.find(std::exp(root.x));
  if (it == solved.end() || !std::isfinite(root.f)) {
    throw NoConvergenceError("multiplier search: no converged evaluation near the root");
  }
  if (std::abs(root.f) > 1e-6 * x) {
    throw NoConvergenceError("multiplier search: bracket collapsed with budget residual " + std::to_string(root.f));
  }
  out.lambda = it->first;
  out.price = root.f + x;
  out.payoff = it->second.payoff;
  out.log_varphi = it->second.log_varphi;
  return out;
}

}  // namespace detail
}  // namespace werm
