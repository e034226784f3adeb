#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "werm/errors.hpp"
#include "werm/measure.hpp"
#include "werm/risk.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

namespace werm {

/// States with payoff above this count as "X > 0" in the complementarity check.
inline constexpr double kkt_support_threshold = 1e-9;

/**
 * Residual of the risk-minimization optimality condition
 *
 *   h'(X) + lambda rho >= 0 everywhere,  = 0 where X > 0.
 *
 * Returns the larger of the worst negative part over all states and the
 * worst absolute violation over states with X above kkt_support_threshold.
 */
inline double kkt_check_riskmin(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x_payoff,
                                double lambda) {
  require_dimension(space, x_payoff.size(), "kkt_check_riskmin");
  const auto marginal = marginal_risk_density(m, space, x_payoff);
  double residual = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double g = marginal[i] + lambda * space.sdf(i);
    residual = std::max(residual, std::max(0.0, -g));
    if (x_payoff[i] > kkt_support_threshold) residual = std::max(residual, std::abs(g));
  }
  return residual;
}

/// max over states of |U'(X) - mu h'(X) - lambda rho|; X must be strictly positive.
inline double kkt_check_eumax(const WeightingMeasure& m, const ProbSpace& space, const UtilityFunction& u,
                              const Payoff& x_payoff, double mu, double lambda) {
  require_dimension(space, x_payoff.size(), "kkt_check_eumax");
  for (std::size_t i = 0; i < x_payoff.size(); ++i) {
    if (!(x_payoff[i] > 0.0)) {
      throw DomainError("kkt_check_eumax: payoff must be strictly positive (state " + std::to_string(i) + ")");
    }
  }
  const auto marginal = marginal_risk_density(m, space, x_payoff);
  double residual = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    residual = std::max(residual, std::abs(u.marginal(x_payoff[i]) - mu * marginal[i] - lambda * space.sdf(i)));
  }
  return residual;
}

}  // namespace werm
