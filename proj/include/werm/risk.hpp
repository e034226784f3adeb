#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "werm/errors.hpp"
#include "werm/measure.hpp"
#include "werm/numeric.hpp"
#include "werm/statespace.hpp"

namespace werm {

namespace detail {

/// log E[exp(-a X)], factoring out exp(-a min X) so large payoffs cannot underflow.
inline double log_mgf(const ProbSpace& space, std::span<const double> x, double a) {
  const double shift = *std::min_element(x.begin(), x.end());
  numeric::CompensatedSum sum;
  const auto p = space.probabilities();
  for (std::size_t i = 0; i < x.size(); ++i) sum.add(p[i] * std::exp(-a * (x[i] - shift)));
  return -a * shift + std::log(sum.value());
}

inline std::vector<double> log_varphi(const WeightingMeasure& m, const ProbSpace& space, std::span<const double> x) {
  require_dimension(space, x.size(), "log_varphi");
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& atom : m.atoms()) out.push_back(log_mgf(space, x, atom.exponent));
  return out;
}

}  // namespace detail

/// Entropic risk (1/a) log E[exp(-a X)].
inline double entropic_risk(double a, const ProbSpace& space, std::span<const double> x) {
  if (!(a > 0.0)) throw DomainError("entropic_risk: a must be positive");
  require_dimension(space, x.size(), "entropic_risk");
  return detail::log_mgf(space, x, a) / a;
}

inline double entropic_risk(double a, const ProbSpace& space, const Payoff& x) {
  return entropic_risk(a, space, x.values());
}

/// Weighted entropic risk h(X) = sum_j w_j (1/a_j) log E[exp(-a_j X)].
inline double werm(const WeightingMeasure& m, const ProbSpace& space, std::span<const double> x) {
  require_dimension(space, x.size(), "werm");
  numeric::CompensatedSum sum;
  for (const auto& atom : m.atoms()) sum.add(atom.weight * detail::log_mgf(space, x, atom.exponent) / atom.exponent);
  return sum.value();
}

inline double werm(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x) {
  return werm(m, space, x.values());
}

/// Weighted average of CARA certainty equivalents, f(X) = -h(X).
inline double cara_certainty_equivalent(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x) {
  return -werm(m, space, x);
}

/**
 * Per-state first variation h'(X) = -sum_j w_j exp(-a_j X) / E[exp(-a_j X)].
 *
 * -h'(X) is the marginal risk density; its expectation is one.
 */
inline std::vector<double> marginal_risk_density(const WeightingMeasure& m, const ProbSpace& space,
                                                 std::span<const double> x) {
  const auto lv = detail::log_varphi(m, space, x);
  std::vector<double> out(x.size());
  const auto& atoms = m.atoms();
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) s += atoms[j].weight * std::exp(-atoms[j].exponent * x[i] - lv[j]);
    out[i] = -s;
  }
  return out;
}

inline std::vector<double> marginal_risk_density(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x) {
  return marginal_risk_density(m, space, x.values());
}

/// Everything the solvers need to know about the risk of one payoff.
struct RiskProfile {
  std::vector<double> log_varphi;  ///< log E[exp(-a X)] per atom, in atom order
  double h_value = 0.0;
  std::vector<double> marginal;  ///< h'(X) per state

  [[nodiscard]] double varphi(std::size_t atom) const { return std::exp(log_varphi[atom]); }
};

inline RiskProfile risk_profile(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x) {
  RiskProfile profile;
  profile.log_varphi = detail::log_varphi(m, space, x.values());
  numeric::CompensatedSum h;
  for (std::size_t j = 0; j < m.size(); ++j) h.add(m.atoms()[j].weight * profile.log_varphi[j] / m.atoms()[j].exponent);
  profile.h_value = h.value();
  profile.marginal = marginal_risk_density(m, space, x);
  return profile;
}

/**
 * psi(y) = sum_j w_j exp(-a_j y) / varphi_j for a fixed varphi vector.
 *
 * Stored in log form: log psi(y) is a log-sum-exp of affine functions of y,
 * hence convex and decreasing with slope confined to [-a1, -a0]. Both the
 * risk-minimization and utility transforms are built on this object.
 */
class PsiFunction {
 public:
  PsiFunction(const WeightingMeasure& m, std::vector<double> log_varphi) {
    if (log_varphi.size() != m.size()) throw DimensionError("PsiFunction: one varphi value per atom is required");
    exponents_.reserve(m.size());
    log_coefficients_.reserve(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (std::isnan(log_varphi[j]) || log_varphi[j] == std::numeric_limits<double>::infinity()) {
        throw DomainError("PsiFunction: varphi must be positive and finite");
      }
      exponents_.push_back(m.atoms()[j].exponent);
      log_coefficients_.push_back(std::log(m.atoms()[j].weight) - log_varphi[j]);
    }
    terms_.resize(m.size());
    a0_ = m.a0();
    a1_ = m.a1();
  }

  /// Builds psi from varphi values themselves (each must be positive).
  static PsiFunction from_varphi(const WeightingMeasure& m, std::span<const double> varphi) {
    std::vector<double> lv;
    lv.reserve(varphi.size());
    for (double v : varphi) {
      if (!(v > 0.0)) throw DomainError("psi: varphi entries must be positive");
      lv.push_back(std::log(v));
    }
    return PsiFunction(m, std::move(lv));
  }

  /// psi_X for a payoff X, i.e. varphi_X(a) = E[exp(-a X)].
  static PsiFunction from_payoff(const WeightingMeasure& m, const ProbSpace& space, std::span<const double> x) {
    return PsiFunction(m, detail::log_varphi(m, space, x));
  }

  [[nodiscard]] double log_value(double y) const {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
      terms_[j] = log_coefficients_[j] - exponents_[j] * y;
      peak = std::max(peak, terms_[j]);
    }
    double s = 0.0;
    for (double t : terms_) s += std::exp(t - peak);
    return peak + std::log(s);
  }

  /// log psi(y) together with d/dy log psi(y).
  [[nodiscard]] std::pair<double, double> log_value_and_slope(double y) const {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
      terms_[j] = log_coefficients_[j] - exponents_[j] * y;
      peak = std::max(peak, terms_[j]);
    }
    double s = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
      const double e = std::exp(terms_[j] - peak);
      s += e;
      weighted += exponents_[j] * e;
    }
    return {peak + std::log(s), -weighted / s};
  }

  [[nodiscard]] double operator()(double y) const { return std::exp(log_value(y)); }

  [[nodiscard]] double derivative(double y) const {
    const auto [lv, slope] = log_value_and_slope(y);
    return std::exp(lv) * slope;
  }

  /**
   * Unique y with psi(y) = z.
   *
   * Expands the bracket [-1, 1] geometrically until log psi - log z changes
   * sign, then runs Newton on log psi with bisection whenever a step leaves
   * the bracket. Converges to within a few ulps of the root.
   */
  [[nodiscard]] double inverse(double z) const {
    if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("psi_inverse: argument must be positive and finite");
    const double target = std::log(z);
    double lo = -1.0;
    double hi = 1.0;
    for (int k = 0; log_value(lo) < target; ++k) {
      if (k > 1100) throw NoConvergenceError("psi_inverse: bracket expansion failed");
      hi = std::min(hi, lo);
      lo *= 2.0;
    }
    for (int k = 0; log_value(hi) > target; ++k) {
      if (k > 1100) throw NoConvergenceError("psi_inverse: bracket expansion failed");
      lo = std::max(lo, hi);
      hi *= 2.0;
    }
    double y = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const auto [lv, slope] = log_value_and_slope(y);
      const double g = lv - target;
      if (g == 0.0) return y;
      if (g > 0.0) lo = y; else hi = y;
      double next = y - g / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (numeric::within_ulps(next - y, y) || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y))) {
        return next;
      }
      y = next;
    }
    return y;
  }

  /**
   * Root of log psi(y) = log_z, started from a nearby guess.
   *
   * Because the slope of log psi lies in [-a1, -a0], one evaluation at the
   * guess pins the root to an explicit interval; Newton started from the left
   * end of that interval increases monotonically to the root (log psi is
   * convex and decreasing), so no further safeguarding is needed.
   */
  [[nodiscard]] double inverse_log_from(double log_z, double guess) const {
    double y = guess;
    auto [lv, slope] = log_value_and_slope(y);
    double g = lv - log_z;
    if (g < 0.0) {
      y -= -g / a0_;
      std::tie(lv, slope) = log_value_and_slope(y);
      g = lv - log_z;
    }
    for (int it = 0; it < 100 && g > 0.0; ++it) {
      const double step = -g / slope;
      y += step;
      if (numeric::within_ulps(step, y)) break;
      std::tie(lv, slope) = log_value_and_slope(y);
      g = lv - log_z;
    }
    return y;
  }

  [[nodiscard]] double a0() const { return a0_; }
  [[nodiscard]] double a1() const { return a1_; }

 private:
  std::vector<double> exponents_;
  std::vector<double> log_coefficients_;
  mutable std::vector<double> terms_;
  double a0_ = 0.0;
  double a1_ = 0.0;
};

/// psi(y) for explicit varphi values (one per atom, all positive).
inline double psi(const WeightingMeasure& m, std::span<const double> varphi, double y) {
  return PsiFunction::from_varphi(m, varphi)(y);
}

/// The y solving psi(y) = z.
inline double psi_inverse(const WeightingMeasure& m, std::span<const double> varphi, double z) {
  if (!(z > 0.0)) throw DomainError("psi_inverse: argument must be positive");
  return PsiFunction::from_varphi(m, varphi).inverse(z);
}

/// Difference quotients of h along a direction, compared with E[h'(X) Y].
struct GateauxReport {
  std::vector<double> steps;
  std::vector<double> quotients;
  double derivative = 0.0;            ///< E[h'(X) Y]
  double relative_error = 0.0;        ///< at the smallest step
  double extrapolated_error = 0.0;    ///< Richardson estimate from the two smallest steps
  bool quotients_decreasing = false;  ///< quotients nonincreasing as t shrinks
  bool passed = false;
};

/**
 * Finite-difference check of the directional derivative of h at X along Y.
 *
 * Passes when the relative error at the smallest step is at most 1e-4.
 */
inline GateauxReport gateaux_derivative_check(const WeightingMeasure& m, const ProbSpace& space, const Payoff& x,
                                              std::span<const double> direction, std::span<const double> steps) {
  require_dimension(space, direction.size(), "gateaux_derivative_check");
  if (steps.empty()) throw DomainError("gateaux_derivative_check: no steps given");
  std::vector<double> sorted(steps.begin(), steps.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (double t : sorted) {
    if (!(t > 0.0)) throw DomainError("gateaux_derivative_check: steps must be positive");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] + t * direction[i] < 0.0) {
        throw DomainError("gateaux_derivative_check: X + tY is negative in state " + std::to_string(i));
      }
    }
  }

  GateauxReport report;
  report.steps = sorted;
  const auto marginal = marginal_risk_density(m, space, x);
  std::vector<double> product(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) product[i] = marginal[i] * direction[i];
  report.derivative = expectation(space, product);

  const double base = werm(m, space, x);
  std::vector<double> shifted(x.size());
  for (double t : sorted) {
    for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] + t * direction[i];
    report.quotients.push_back((werm(m, space, shifted) - base) / t);
  }
  const double scale = std::max(std::abs(report.derivative), 1e-300);
  report.relative_error = std::abs(report.quotients.back() - report.derivative) / scale;
  if (report.quotients.size() >= 2) {
    const std::size_t k = report.quotients.size() - 1;
    const double t1 = sorted[k - 1];
    const double t2 = sorted[k];
    const double extrapolated = (t1 * report.quotients[k] - t2 * report.quotients[k - 1]) / (t1 - t2);
    report.extrapolated_error = std::abs(extrapolated - report.derivative) / scale;
  } else {
    report.extrapolated_error = report.relative_error;
  }
  report.quotients_decreasing = std::is_sorted(report.quotients.rbegin(), report.quotients.rend());
  report.passed = report.relative_error <= 1e-4;
  return report;
}

}  // namespace werm
