#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "werm/balance.hpp"
#include "werm/errors.hpp"
#include "werm/eumax.hpp"
#include "werm/measure.hpp"
#include "werm/numeric.hpp"
#include "werm/risk.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

namespace werm {

/// WERM of a payoff rule rho -> X(rho) under a log-normal SDF, by quadrature over log(rho).
inline double lognormal_werm(const WeightingMeasure& m, const LogNormalSDF& model,
                             const std::function<double(double)>& payoff_rule) {
  numeric::CompensatedSum total;
  for (const auto& atom : m.atoms()) {
    const double a = atom.exponent;
    const double mgf = numeric::normal_expectation([&](double z) { return std::exp(-a * payoff_rule(model.at(z))); });
    total.add(atom.weight * std::log(mgf) / a);
  }
  return total.value();
}

/**
 * Entropic risk minimizer under a log-normal SDF.
 *
 * X*(rho) = (-(log c1 + log rho) / a)^+ with c1 fixed by the budget, and
 * gamma1 = log E[(c1 rho) ^ 1] / a. Writing d = k - sigma with
 * k = -(b + log c1) / sigma, the budget reads
 * sigma E[rho] (phi(d) + d N(d)) / a = x.
 */
struct EntropicRiskMin {
  double a = 0.0;
  double c1 = 0.0;
  double log_c1 = 0.0;
  double c = 0.0;  ///< E[(c1 rho) ^ 1] = E[exp(-a X*)]
  double lambda = 0.0;
  double gamma1 = 0.0;

  [[nodiscard]] double payoff(double rho) const {
    const double v = -(log_c1 + std::log(rho)) / a;
    return v > 0.0 ? v : 0.0;
  }

  [[nodiscard]] Payoff payoff_on(const ProbSpace& space) const {
    std::vector<double> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) out[i] = payoff(space.sdf(i));
    return Payoff(std::move(out));
  }
};

inline EntropicRiskMin entropic_risk_min_closed_form(double a, const LogNormalSDF& model, double x_budget) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("entropic_risk_min_closed_form: a must be positive");
  if (!(x_budget > 0.0)) throw DomainError("entropic_risk_min_closed_form: budget must be positive");
  const double sigma = model.sigma;
  const double target = a * x_budget / (sigma * model.mean());

  // g(d) = phi(d) + d N(d) is convex increasing with g(d) > d, so Newton from
  // d = target approaches the root monotonically from the right.
  double d = target;
  for (int it = 0; it < 200; ++it) {
    const double g = numeric::normal_pdf(d) + d * numeric::normal_cdf(d);
    const double step = (g - target) / numeric::normal_cdf(d);
    d -= step;
    if (!(step > 0.0) || numeric::within_ulps(step, d)) break;
  }

  EntropicRiskMin out;
  out.a = a;
  const double k = d + sigma;
  out.log_c1 = -model.b - sigma * k;
  out.c1 = std::exp(out.log_c1);
  out.c = out.c1 * model.mean() * numeric::normal_cdf(d) + numeric::normal_cdf(-k);
  out.lambda = out.c1 / out.c;
  out.gamma1 = std::log(out.c) / a;
  return out;
}

/// Unconstrained CRRA optimizer X = (U')^-1(lambda rho) under a log-normal SDF.
struct LogNormalUnconstrained {
  double lambda = 0.0;
  double scale = 0.0;  ///< X(rho) = scale * (U')^-1(rho)
  double gamma2 = 0.0;
  const UtilityFunction* utility = nullptr;

  [[nodiscard]] double payoff(double rho) const { return scale * utility->inverse_marginal(rho); }
};

inline LogNormalUnconstrained lognormal_unconstrained_eu(const WeightingMeasure& m, const LogNormalSDF& model,
                                                         const UtilityFunction& u, double x_budget) {
  if (!(x_budget > 0.0)) throw DomainError("lognormal_unconstrained_eu: budget must be positive");
  const double r = u.risk_aversion();
  const double e = 1.0 - 1.0 / r;
  const double moment = std::exp(e * model.b + 0.5 * e * e * model.sigma * model.sigma);  // E[rho^(1-1/r)]
  LogNormalUnconstrained out;
  out.utility = &u;
  out.scale = x_budget / moment;
  out.lambda = std::pow(out.scale, -r);
  out.gamma2 = lognormal_werm(m, model, [&](double rho) { return out.payoff(rho); });
  return out;
}

/**
 * Entropic utility maximizer under a log-normal SDF.
 *
 * With psi(y) = exp(-a(y + gamma)) and g(y) = U'(y) + mu psi(y), the optimum
 * is X* = g^-1(lambda rho), and (lambda, mu) solve
 *
 *   E[exp(-a X*)] = 1 - a int_0^inf exp(-a y) F_rho(g(y) / lambda) dy = exp(a gamma)
 *   E[rho X*]     = -(1/lambda) int_0^inf y g'(y) f_Z((log(g(y)/lambda) - b) / sigma) / sigma dy = x
 *
 * solved by nested root finding (inner lambda for the budget, outer mu for the
 * risk cap). The report's payoff is X* evaluated on `eval_space`; budget, risk
 * and utility values are continuum quantities recomputed by quadrature over
 * log(rho), and kkt_residual is the state-wise residual of U' + mu psi = lambda rho.
 */
inline EUMaxReport entropic_eu_closed_form(double a, const LogNormalSDF& model, const UtilityFunction& u,
                                           double x_budget, double gamma, const ProbSpace& eval_space,
                                           const SolverConfig& cfg = {}) {
  cfg.validate();
  const auto m = WeightingMeasure::single(a);
  const auto rm = entropic_risk_min_closed_form(a, model, x_budget);
  const auto un = lognormal_unconstrained_eu(m, model, u, x_budget);

  EUMaxReport report;
  report.gamma1 = rm.gamma1;
  report.gamma2 = un.gamma2;
  if (gamma < rm.gamma1 - cfg.risk_tol) {
    throw InfeasibleError("risk cap " + std::to_string(gamma) + " is below gamma1(x) = " + std::to_string(rm.gamma1),
                          rm.gamma1, un.gamma2);
  }

  const double sigma = model.sigma;
  const PsiFunction psi(m, {a * gamma});
  auto finish = [&](const std::function<double(double)>& rule, double lambda, double mu) {
    report.lambda_star = lambda;
    report.mu_star = mu;
    std::vector<double> values(eval_space.size());
    for (std::size_t i = 0; i < eval_space.size(); ++i) values[i] = rule(eval_space.sdf(i));
    report.payoff = Payoff(std::move(values));
    const double price = numeric::normal_expectation([&](double z) { return model.at(z) * rule(model.at(z)); });
    report.budget_residual = price - x_budget;
    report.risk_value = lognormal_werm(m, model, rule);
    report.risk_residual = report.risk_value - gamma;
    report.eu_value = numeric::normal_expectation([&](double z) { return u.value(rule(model.at(z))); });
  };

  if (gamma >= un.gamma2) {
    report.regime = EUMaxRegime::unconstrained;
    finish([&](double rho) { return un.payoff(rho); }, un.lambda, 0.0);
    double kkt = 0.0;
    for (std::size_t i = 0; i < eval_space.size(); ++i) {
      kkt = std::max(kkt, std::abs(u.marginal(report.payoff[i]) - un.lambda * eval_space.sdf(i)));
    }
    report.kkt_residual = kkt;
    return report;
  }
  if (gamma <= rm.gamma1 + cfg.risk_tol) {
    report.regime = EUMaxRegime::risk_minimizer;
    finish([&](double rho) { return rm.payoff(rho); }, rm.lambda, std::numeric_limits<double>::infinity());
    report.kkt_residual = 0.0;
    return report;
  }

  auto g = [&](double mu, double y) { return u.marginal(y) + mu * psi(y); };
  auto g_prime = [&](double mu, double y) { return u.second_derivative(y) + mu * psi.derivative(y); };
  auto invert = [&](double mu, double lambda, double rho) {
    return detail::solve_marginal_balance(u, psi, mu, lambda * rho);
  };
  // Splitting at the payoff of the median state keeps the quadrature on the bulk of the mass.
  auto split_integral = [&](const std::function<double(double)>& f, double split) {
    return numeric::integrate(f, 0.0, split, 1e-12) +
           numeric::integrate(f, split, std::numeric_limits<double>::infinity(), 1e-12);
  };
  auto price_of = [&](double mu, double lambda) {
    const double split = invert(mu, lambda, std::exp(model.b));
    auto f = [&](double y) {
      const double gy = g(mu, y);
      const double z = (std::log(gy / lambda) - model.b) / sigma;
      return y * g_prime(mu, y) * numeric::normal_pdf(z) / sigma;
    };
    return -split_integral(f, split) / lambda;
  };
  auto mgf_of = [&](double mu, double lambda) {
    const double split = invert(mu, lambda, std::exp(model.b));
    auto f = [&](double y) { return std::exp(-a * y) * sdf_cdf(model, g(mu, y) / lambda); };
    return 1.0 - a * split_integral(f, split);
  };

  const double log_limit = std::log(cfg.bracket_limit);
  auto expand_and_solve = [&](const std::function<double(double)>& f, double start, double tol,
                              const char* what) {
    numeric::BracketSample a0{start, f(start)};
    auto accept = [&](double, double v) { return std::abs(v) <= tol; };
    if (accept(a0.x, a0.f)) return a0.x;
    numeric::BracketSample b0 = a0;
    double step = std::log(4.0);
    const double direction = a0.f > 0.0 ? 1.0 : -1.0;  // both gaps decrease in their multiplier
    while (std::signbit(b0.f) == std::signbit(a0.f)) {
      a0 = b0;
      const double next = a0.x + direction * step;
      if (std::abs(next - start) > log_limit) {
        throw ConfigError(std::string("entropic_eu_closed_form: ") + what + " bracket exceeded the configured limit");
      }
      b0 = {next, f(next)};
      if (accept(b0.x, b0.f)) return b0.x;
      step *= 2.0;
    }
    return numeric::bracketed_solve(f, a0, b0, accept, 1e-15, cfg.max_evaluations).x;
  };

  double last_log_lambda = std::log(un.lambda);
  auto lambda_for = [&](double mu) {
    auto budget_gap = [&](double log_lambda) { return price_of(mu, std::exp(log_lambda)) - x_budget; };
    last_log_lambda = expand_and_solve(budget_gap, last_log_lambda, cfg.budget_rel_tol * x_budget, "lambda");
    return std::exp(last_log_lambda);
  };
  auto risk_gap = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    const double lambda = lambda_for(mu);
    const double mgf = mgf_of(mu, lambda);
    report.trace.push_back({mu, lambda, std::log(mgf) / a});
    return std::log(mgf) / a - gamma;
  };
  const double log_mu = expand_and_solve(risk_gap, 0.0, cfg.risk_tol, "mu");
  const double mu = std::exp(log_mu);
  const double lambda = lambda_for(mu);

  report.regime = EUMaxRegime::interior;
  finish([&](double rho) { return invert(mu, lambda, rho); }, lambda, mu);
  double kkt = 0.0;
  for (std::size_t i = 0; i < eval_space.size(); ++i) {
    kkt = std::max(kkt, std::abs(g(mu, report.payoff[i]) - lambda * eval_space.sdf(i)));
  }
  report.kkt_residual = kkt;
  return report;
}

}  // namespace werm
