#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "werm/balance.hpp"
#include "werm/measure.hpp"
#include "werm/numeric.hpp"
#include "werm/risk.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

namespace werm {

/**
 * Residuals of the varphi equations
 *
 *   varphi(a) = 1 - a int_0^inf exp(-a y) F_rho(g(y) / lambda) dy
 *
 * where g is psi (risk minimization) or U' + mu psi (utility maximization),
 * both built from the candidate varphi.
 */
struct IntegralSystemReport {
  std::vector<double> residuals;  ///< per atom
  double max_residual = 0.0;
};

namespace detail {

/**
 * Discrete F_rho is a step function, so F_rho(g(y)/lambda) = P(y <= y_i)
 * with kinks y_i = g^-1(lambda rho_i). Between consecutive kinks the
 * integrand is c exp(-a y), integrated exactly; summing the pieces gives
 * sum_i p_i (1 - exp(-a y_i^+)) / a.
 */
inline IntegralSystemReport discrete_residuals(const WeightingMeasure& m, const ProbSpace& space,
                                               const std::vector<double>& log_varphi,
                                               const std::vector<double>& kinks) {
  IntegralSystemReport report;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double a = m.atoms()[j].exponent;
    numeric::CompensatedSum integral;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double y = std::max(kinks[i], 0.0);
      integral.add(space.probability(i) * -std::expm1(-a * y) / a);
    }
    const double r = std::exp(log_varphi[j]) - (1.0 - a * integral.value());
    report.residuals.push_back(r);
    report.max_residual = std::max(report.max_residual, std::abs(r));
  }
  return report;
}

inline IntegralSystemReport lognormal_residuals(const WeightingMeasure& m, const LogNormalSDF& model,
                                                const std::vector<double>& log_varphi,
                                                const std::function<double(double)>& boundary, double lambda) {
  IntegralSystemReport report;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double a = m.atoms()[j].exponent;
    auto integrand = [&](double y) { return std::exp(-a * y) * sdf_cdf(model, boundary(y) / lambda); };
    const double integral = numeric::integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
    const double r = std::exp(log_varphi[j]) - (1.0 - a * integral);
    report.residuals.push_back(r);
    report.max_residual = std::max(report.max_residual, std::abs(r));
  }
  return report;
}

}  // namespace detail

/// (varphi, psi) system for a candidate risk minimizer on a finite space; varphi is taken from the payoff.
inline IntegralSystemReport check_integral_system(const WeightingMeasure& m, const ProbSpace& space,
                                                  const Payoff& x_payoff, double lambda) {
  require_dimension(space, x_payoff.size(), "check_integral_system");
  const auto lv = detail::log_varphi(m, space, x_payoff.values());
  const PsiFunction psi(m, lv);
  std::vector<double> kinks(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) kinks[i] = psi.inverse(lambda * space.sdf(i));
  return detail::discrete_residuals(m, space, lv, kinks);
}

/// (varphi, psi) system under a log-normal SDF for candidate varphi values (as logs).
inline IntegralSystemReport check_integral_system(const WeightingMeasure& m, const LogNormalSDF& model,
                                                  const std::vector<double>& log_varphi, double lambda) {
  const PsiFunction psi(m, log_varphi);
  return detail::lognormal_residuals(m, model, log_varphi, [&](double y) { return psi(y); }, lambda);
}

/// (varphi, phi) system for a candidate utility maximizer on a finite space.
inline IntegralSystemReport check_integral_system_eu(const WeightingMeasure& m, const ProbSpace& space,
                                                     const UtilityFunction& u, const Payoff& x_payoff, double mu,
                                                     double lambda) {
  require_dimension(space, x_payoff.size(), "check_integral_system_eu");
  const auto lv = detail::log_varphi(m, space, x_payoff.values());
  const PsiFunction psi(m, lv);
  std::vector<double> kinks(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    kinks[i] = detail::solve_marginal_balance(u, psi, mu, lambda * space.sdf(i));
  }
  return detail::discrete_residuals(m, space, lv, kinks);
}

/// (varphi, phi) system under a log-normal SDF for candidate varphi values (as logs).
inline IntegralSystemReport check_integral_system_eu(const WeightingMeasure& m, const LogNormalSDF& model,
                                                     const UtilityFunction& u, const std::vector<double>& log_varphi,
                                                     double mu, double lambda) {
  const PsiFunction psi(m, log_varphi);
  return detail::lognormal_residuals(
      m, model, log_varphi, [&](double y) { return u.marginal(y) + mu * psi(y); }, lambda);
}

}  // namespace werm
