#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "werm/balance.hpp"
#include "werm/errors.hpp"
#include "werm/fixed_point.hpp"
#include "werm/kkt.hpp"
#include "werm/measure.hpp"
#include "werm/numeric.hpp"
#include "werm/risk.hpp"
#include "werm/riskmin.hpp"
#include "werm/search.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

namespace werm {

/// Expected utility E[U(X)]; -inf when X vanishes in some state and U(0) = -inf.
inline double expected_utility(const UtilityFunction& u, const ProbSpace& space, const Payoff& x_payoff) {
  require_dimension(space, x_payoff.size(), "expected_utility");
  numeric::CompensatedSum sum;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double v = u.value(x_payoff[i]);
    if (!std::isfinite(v)) return v;
    sum.add(space.probability(i) * v);
  }
  return sum.value();
}

struct UnconstrainedSolution {
  Payoff payoff;        ///< X_o = (U')^-1(lambda_o rho)
  double lambda = 0.0;  ///< lambda_o
  double gamma2 = 0.0;  ///< h(X_o)
  double eu_value = 0.0;
};

/**
 * Expected-utility maximizer without the risk cap.
 *
 * For the built-in CRRA utilities (U')^-1(lambda rho) = lambda^(-1/r) rho^(-1/r),
 * so the budget equation is solved in closed form:
 * lambda_o = (E[rho^(1-1/r)] / x)^r. Log utility gives X_o = x / rho.
 */
inline UnconstrainedSolution unconstrained_eu(const WeightingMeasure& m, const UtilityFunction& u,
                                              const ProbSpace& space, double x_budget) {
  if (!(x_budget > 0.0)) throw DomainError("unconstrained_eu: budget must be positive");
  const double r = u.risk_aversion();
  std::vector<double> shape(space.size());
  numeric::CompensatedSum price;
  for (std::size_t i = 0; i < space.size(); ++i) {
    shape[i] = u.inverse_marginal(space.sdf(i));
    price.add(space.probability(i) * space.sdf(i) * shape[i]);
  }
  const double scale = x_budget / price.value();
  for (auto& v : shape) v *= scale;
  UnconstrainedSolution out;
  out.lambda = std::pow(scale, -r);
  out.payoff = Payoff(std::move(shape));
  out.gamma2 = werm(m, space, out.payoff);
  out.eu_value = expected_utility(u, space, out.payoff);
  return out;
}

namespace detail {

/// Per-state root of U'(y) + mu psi_X(y) = lambda rho.
struct EUKernel {
  static constexpr bool shift_equivariant = false;
  std::span<const double> sdf;
  const UtilityFunction* utility;
  double mu;
  double lambda;

  [[nodiscard]] double root(std::size_t i, const PsiFunction& psi, double warm) const {
    return solve_marginal_balance(*utility, psi, mu, lambda * sdf[i], warm);
  }
  [[nodiscard]] double clip(double r) const { return r; }
};

inline void require_mu(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("mu must be nonnegative and finite");
}

}  // namespace detail

/// The utility transform: per state, the y > 0 solving U'(y) + mu psi_X(y) = lambda rho.
inline Payoff transform_TT(const WeightingMeasure& m, const ProbSpace& space, const UtilityFunction& u,
                           const Payoff& x_payoff, double mu, double lambda) {
  detail::require_mu(mu);
  detail::require_lambda(lambda);
  require_dimension(space, x_payoff.size(), "transform_TT");
  const detail::EUKernel kernel{space.sdfs(), &u, mu, lambda};
  std::vector<double> roots(space.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> out(space.size());
  detail::apply_transform(kernel, m, detail::log_varphi(m, space, x_payoff.values()), roots, out);
  return Payoff(std::move(out));
}

/// Monotone iteration Y_0 = 0, Y_{n+1} = TT Y_n for max E[U(X)] - mu h(X) - lambda E[rho X].
inline FixedPointResult solve_fixed_point_eu(const WeightingMeasure& m, const ProbSpace& space,
                                             const UtilityFunction& u, double mu, double lambda,
                                             const FixedPointConfig& cfg = {}, const IterateObserver& observer = {},
                                             const std::optional<Payoff>& start = std::nullopt) {
  detail::require_mu(mu);
  detail::require_lambda(lambda);
  const detail::EUKernel kernel{space.sdfs(), &u, mu, lambda};
  return detail::iterate_plain(kernel, m, space, start.value_or(Payoff::zeros(space.size())), cfg, observer);
}

/**
 * Finds lambda with E[rho X^{mu,lambda}] = x for fixed mu.
 *
 * Searched on (mu / E[rho], inf). Taking expectations in the optimality
 * condition gives lambda E[rho] = E[U'(X)] + mu, so a payoff from a nearby
 * problem (`seed`) yields a close first guess; the first evaluation is also
 * started from it. Without a seed the guess is the unconstrained multiplier
 * shifted by mu / E[rho].
 */
inline LambdaSearchResult lambda_search_eu(const WeightingMeasure& m, const ProbSpace& space,
                                           const UtilityFunction& u, double mu, double x_budget,
                                           const SolverConfig& cfg = {}, const Payoff* seed = nullptr) {
  if (!(mu > 0.0)) throw DomainError("lambda_search_eu: mu must be positive");
  if (!(x_budget > 0.0)) throw DomainError("lambda_search_eu: budget must be positive");
  const double lambda_min = mu / space.mean_sdf();
  double guess = 0.0;
  double step = std::log(2.0);
  if (seed != nullptr && seed->min() > 0.0) {
    require_dimension(space, seed->size(), "lambda_search_eu seed");
    numeric::CompensatedSum marginal;
    for (std::size_t i = 0; i < space.size(); ++i) marginal.add(space.probability(i) * u.marginal((*seed)[i]));
    guess = (marginal.value() + mu) / space.mean_sdf();
    step = 0.01;
  } else {
    seed = nullptr;
    guess = lambda_min + unconstrained_eu(m, u, space, x_budget).lambda;
  }
  auto solve = [&](double lambda, const Payoff& start) {
    const detail::EUKernel kernel{space.sdfs(), &u, mu, lambda};
    return detail::iterate_accelerated(kernel, m, space, start, cfg.fixed_point);
  };
  return detail::search_lambda(solve, space, lambda_min, guess, x_budget, cfg, step, seed);
}

enum class EUMaxRegime {
  interior,        ///< gamma1 < gamma < gamma2: both constraints bind
  risk_minimizer,  ///< gamma == gamma1: only the risk minimizer is feasible
  unconstrained,   ///< gamma >= gamma2: the risk cap is slack
};

inline const char* to_string(EUMaxRegime regime) {
  switch (regime) {
    case EUMaxRegime::interior: return "interior";
    case EUMaxRegime::risk_minimizer: return "risk_minimizer";
    case EUMaxRegime::unconstrained: return "unconstrained";
  }
  return "unknown";
}

/// One evaluation of Gamma(mu) = h(X^{*mu}).
struct MuTracePoint {
  double mu;
  double lambda;
  double risk;
};

struct EUMaxReport {
  Payoff payoff;
  double lambda_star = 0.0;
  double mu_star = 0.0;
  double eu_value = 0.0;
  double risk_value = 0.0;
  double budget_residual = 0.0;
  double risk_residual = 0.0;  ///< h(X*) - gamma
  double kkt_residual = 0.0;
  int iterations = 0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  EUMaxRegime regime = EUMaxRegime::interior;
  std::vector<MuTracePoint> trace;
};

/**
 * max E[U(X)] subject to E[rho X] <= x and h(X) <= gamma.
 *
 * Computes gamma1(x) (risk minimizer) and gamma2(x) (unconstrained maximizer)
 * first. Inside (gamma1, gamma2) the risk multiplier mu is searched on log mu
 * using that Gamma(mu) = h(X^{*mu}) is decreasing, each evaluation running
 * lambda_search_eu. Throws InfeasibleError for gamma below gamma1.
 */
inline EUMaxReport mu_search(const WeightingMeasure& m, const ProbSpace& space, const UtilityFunction& u,
                             double x_budget, double gamma, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (!(x_budget > 0.0)) throw DomainError("mu_search: budget must be positive");
  const auto rm = solve_risk_min(m, space, x_budget, cfg);
  const auto un = unconstrained_eu(m, u, space, x_budget);

  EUMaxReport report;
  report.gamma1 = rm.risk_value;
  report.gamma2 = un.gamma2;
  auto fill = [&](Payoff payoff, double lambda, double mu) {
    report.lambda_star = lambda;
    report.mu_star = mu;
    report.eu_value = expected_utility(u, space, payoff);
    report.risk_value = werm(m, space, payoff);
    report.budget_residual = budget(space, payoff) - x_budget;
    report.risk_residual = report.risk_value - gamma;
    report.payoff = std::move(payoff);
  };

  if (gamma < report.gamma1 - cfg.risk_tol) {
    throw InfeasibleError("risk cap " + std::to_string(gamma) + " is below gamma1(x) = " +
                              std::to_string(report.gamma1) + "; no affordable payoff meets it",
                          report.gamma1, report.gamma2);
  }
  if (gamma >= report.gamma2) {
    report.regime = EUMaxRegime::unconstrained;
    fill(un.payoff, un.lambda, 0.0);
    report.kkt_residual = kkt_check_eumax(m, space, u, report.payoff, 0.0, un.lambda);
    return report;
  }
  if (gamma <= report.gamma1 + cfg.risk_tol) {
    report.regime = EUMaxRegime::risk_minimizer;
    fill(rm.payoff, rm.lambda_star, std::numeric_limits<double>::infinity());
    report.kkt_residual = rm.kkt_residual;
    report.iterations = rm.iterations;
    return report;
  }

  std::map<double, LambdaSearchResult> solved;
  Payoff last_payoff = un.payoff;
  int iterations = rm.iterations;
  auto evaluate = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    auto res = lambda_search_eu(m, space, u, mu, x_budget, cfg, &last_payoff);
    iterations += res.iterations;
    last_payoff = res.payoff;
    const double risk = werm(m, space, res.payoff);
    report.trace.push_back({mu, res.lambda, risk});
    solved.insert_or_assign(mu, std::move(res));
    return risk - gamma;
  };
  auto accept = [&](double, double f) { return std::abs(f) <= cfg.risk_tol; };

  const double limit = std::log(cfg.bracket_limit);
  numeric::BracketSample a{0.0, evaluate(0.0)};
  numeric::BracketSample root = a;
  if (!accept(a.x, a.f)) {
    const double direction = a.f > 0.0 ? 1.0 : -1.0;  // Gamma too high -> raise mu
    numeric::BracketSample b = a;
    double step = std::log(4.0);
    while (std::signbit(b.f) == std::signbit(a.f)) {
      a = b;
      const double next = a.x + direction * step;
      if (std::abs(next) > limit) throw ConfigError("mu_search: bracket expansion exceeded the configured limit");
      b = {next, evaluate(next)};
      if (accept(b.x, b.f)) break;
      step *= 2.0;
    }
    root = accept(b.x, b.f) ? b : numeric::bracketed_solve(evaluate, a, b, accept, 1e-15, cfg.max_evaluations);
  }
  if (std::abs(root.f) > 1e-6) throw NoConvergenceError("mu_search: risk residual " + std::to_string(root.f));

  auto& best = solved.at(std::exp(root.x));
  const double mu_star = std::exp(root.x);
  report.regime = EUMaxRegime::interior;
  report.iterations = iterations;
  fill(best.payoff, best.lambda, mu_star);
  report.kkt_residual = kkt_check_eumax(m, space, u, report.payoff, mu_star, best.lambda);
  return report;
}

/**
 * Number of sign changes of a - b scanned in ascending SDF order.
 *
 * Both payoffs must be nonincreasing in rho. Differences within 1e-12
 * (relative) of zero are treated as ties and skipped. States with SDF above
 * `rho_max` are left out of the count.
 */
inline int single_crossing_check(const Payoff& payoff_a, const Payoff& payoff_b, const ProbSpace& space,
                                 double rho_max = std::numeric_limits<double>::infinity()) {
  require_dimension(space, payoff_a.size(), "single_crossing_check");
  require_dimension(space, payoff_b.size(), "single_crossing_check");
  auto check_monotone = [](const Payoff& p, const char* name) {
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[i - 1] + 1e-12 * (1.0 + std::abs(p[i - 1]))) {
        throw DomainError(std::string("single_crossing_check: ") + name + " is not nonincreasing in rho at state " +
                          std::to_string(i));
      }
    }
  };
  check_monotone(payoff_a, "payoff_a");
  check_monotone(payoff_b, "payoff_b");

  int changes = 0;
  int last_sign = 0;
  for (std::size_t i = 0; i < space.size() && space.sdf(i) <= rho_max; ++i) {
    const double d = payoff_a[i] - payoff_b[i];
    const double scale = 1.0 + std::max(std::abs(payoff_a[i]), std::abs(payoff_b[i]));
    if (std::abs(d) <= 1e-12 * scale) continue;
    const int sign = d > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++changes;
    last_sign = sign;
  }
  return changes;
}

}  // namespace werm
