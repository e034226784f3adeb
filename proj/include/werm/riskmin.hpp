#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "werm/errors.hpp"
#include "werm/fixed_point.hpp"
#include "werm/integral_system.hpp"
#include "werm/kkt.hpp"
#include "werm/measure.hpp"
#include "werm/risk.hpp"
#include "werm/search.hpp"
#include "werm/statespace.hpp"

namespace werm {

namespace detail {

/// Per-state root of psi_X(y) = lambda rho, clipped at zero.
struct RiskMinKernel {
  static constexpr bool shift_equivariant = true;
  std::span<const double> sdf;
  double lambda;

  [[nodiscard]] double root(std::size_t i, const PsiFunction& psi, double warm) const {
    return psi.inverse_log_from(std::log(lambda * sdf[i]), std::isnan(warm) ? 0.0 : warm);
  }
  [[nodiscard]] double clip(double r) const { return r > 0.0 ? r : 0.0; }
};

inline void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive and finite");
}

}  // namespace detail

/// T X = (psi_X^-1(lambda rho))^+.
inline Payoff transform_T(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x_payoff, double lambda) {
  detail::require_lambda(lambda);
  require_dimension(space, x_payoff.size(), "transform_T");
  const detail::RiskMinKernel kernel{space.sdfs(), lambda};
  std::vector<double> roots(space.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> out(space.size());
  detail::apply_transform(kernel, m, detail::log_varphi(m, space, x_payoff.values()), roots, out);
  return Payoff(std::move(out));
}

/**
 * Monotone iteration X_0 = 0, X_{n+1} = T X_n for the Lagrangian problem
 * min h(X) + lambda E[rho X].
 *
 * Converges to the minimizer exactly when the limit has finite price;
 * otherwise the result carries FixedPointStatus::diverged. A nonzero `start`
 * must be a subsolution (start <= T start) for the iterates to stay monotone.
 */
inline FixedPointResult solve_fixed_point(const WeightingMeasure& m, const ProbSpace& space, double lambda,
                                          const FixedPointConfig& cfg = {}, const IterateObserver& observer = {},
                                          const std::optional<Payoff>& start = std::nullopt) {
  detail::require_lambda(lambda);
  const detail::RiskMinKernel kernel{space.sdfs(), lambda};
  return detail::iterate_plain(kernel, m, space, start.value_or(Payoff::zeros(space.size())), cfg, observer);
}

/**
 * Finds lambda* with E[rho X^lambda*] = x.
 *
 * The price map is nonincreasing in lambda on (1/E[rho], inf); below
 * 1/E[rho] the Lagrangian is unbounded. Each evaluation solves the fixed
 * point (accelerated on varphi, certified by plain steps). Budgets large
 * enough to fund every state are solved at lambda = 1/E[rho] itself.
 */
inline LambdaSearchResult lambda_search(const WeightingMeasure& m, const ProbSpace& space, double x_budget,
                                        const SolverConfig& cfg = {}) {
  if (!(x_budget > 0.0)) throw DomainError("lambda_search: budget must be positive");
  auto solve = [&](double lambda, const Payoff& start) {
    const detail::RiskMinKernel kernel{space.sdfs(), lambda};
    return detail::iterate_accelerated(kernel, m, space, start, cfg.fixed_point);
  };
  const double lambda_min = 1.0 / space.mean_sdf();
  auto out = detail::search_lambda(solve, space, lambda_min, 2.0 * lambda_min, x_budget, cfg);
  if (out.at_floor) {
    // Every state is funded beyond this budget; cash additivity makes the
    // optimum the floor solution plus a constant.
    const double shift = (x_budget - out.price) / space.mean_sdf();
    std::vector<double> shifted(out.payoff.values().begin(), out.payoff.values().end());
    for (auto& v : shifted) v += shift;
    out.payoff = Payoff(std::move(shifted));
    out.log_varphi = detail::log_varphi(m, space, out.payoff.values());
    out.price = budget(space, out.payoff);
  }
  return out;
}

struct RiskMinReport {
  Payoff payoff;
  double lambda_star = 0.0;
  double risk_value = 0.0;       ///< h(X*) = gamma1(x)
  double budget_residual = 0.0;  ///< E[rho X*] - x
  double kkt_residual = 0.0;
  int iterations = 0;
  double psi_residual = 0.0;     ///< residual of the (varphi, psi) integral system
  std::vector<LambdaTracePoint> trace;
};

/// min h(X) subject to E[rho X] <= x, X >= 0.
inline RiskMinReport solve_risk_min(const WeightingMeasure& m, const ProbSpace& space, double x_budget,
                                    const SolverConfig& cfg = {}) {
  auto search = lambda_search(m, space, x_budget, cfg);
  RiskMinReport report;
  report.lambda_star = search.lambda;
  report.risk_value = werm(m, space, search.payoff);
  report.budget_residual = budget(space, search.payoff) - x_budget;
  report.kkt_residual = kkt_check_riskmin(m, space, search.payoff, search.lambda);
  report.iterations = search.iterations;
  report.psi_residual = check_integral_system(m, space, search.payoff, search.lambda).max_residual;
  report.trace = std::move(search.trace);
  report.payoff = std::move(search.payoff);
  return report;
}

}  // namespace werm
