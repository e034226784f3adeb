#pragma once

#include <cmath>
#include <limits>

#include "werm/numeric.hpp"
#include "werm/risk.hpp"
#include "werm/utility.hpp"

namespace werm::detail {

/**
 * Unique y > 0 with U'(y) + mu psi(y) = target.
 *
 * The left side is convex and strictly decreasing on (0, inf) and spans
 * (0, inf), so Newton started at any point where it exceeds the target
 * climbs monotonically to the root. (U')^-1(target) is always such a point;
 * a warm guess is halved until it becomes one.
 */
inline double solve_marginal_balance(const UtilityFunction& u, const PsiFunction& psi, double mu, double target,
                                     double warm = std::numeric_limits<double>::quiet_NaN()) {
  double slope = 0.0;
  auto value = [&](double y) {
    slope = u.second_derivative(y);
    double f = u.marginal(y) - target;
    if (mu > 0.0) {
      const auto [lv, log_slope] = psi.log_value_and_slope(y);
      const double p = mu * std::exp(lv);
      f += p;
      slope += p * log_slope;
    }
    return f;
  };
  double y = (std::isfinite(warm) && warm > 0.0) ? warm : u.inverse_marginal(target);
  double f = value(y);
  for (int k = 0; f < 0.0 && k < 2100; ++k) {
    y *= 0.5;
    f = value(y);
  }
  for (int it = 0; it < 500 && f > 0.0; ++it) {
    const double step = f / -slope;
    y += step;
    if (numeric::within_ulps(step, y)) break;
    f = value(y);
  }
  return y;
}

}  // namespace werm::detail
