#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "werm/errors.hpp"

namespace werm::numeric {

/**
 * Neumaier's variant of Kahan compensated summation.
 *
 * Terms are accumulated in the order they are added, so callers that iterate
 * states in ascending index order get reproducible results.
 */
class CompensatedSum {
 public:
  void add(double term) {
    const double t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term)) {
      compensation_ += (sum_ - t) + term;
    } else {
      compensation_ += (term - t) + sum_;
    }
    sum_ = t;
  }

  [[nodiscard]] double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal distribution function via erfc (full double accuracy in both tails).
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/**
 * Standard normal quantile.
 *
 * Acklam's rational approximation (relative error about 1.15e-9) followed by a
 * single Halley step against the erfc-based normal_cdf, which brings the
 * result to within a few ulps across (0, 1).
 */
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal_quantile: probability must lie in [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley polish. In the upper tail work with the complementary probability
  // so that the residual is not swamped by cancellation against 1.
  const double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// log(sum_j exp(t_j)) without overflow.
inline double log_sum_exp(std::span<const double> terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

/// Machine-precision comparison helper for stopping rules.
inline bool within_ulps(double step, double scale, double ulps = 4.0) {
  return std::abs(step) <= ulps * std::numeric_limits<double>::epsilon() * std::max(std::abs(scale), 1e-300);
}

/**
 * One point visited by bracketed_solve; kept so callers can inspect the trace.
 */
struct BracketSample {
  double x;
  double f;
};

/**
 * Bracketed root finder for a monotone scalar map.
 *
 * Maintains a sign-changing bracket [lo, hi] and proposes Illinois
 * (modified regula falsi) points, falling back to bisection whenever an
 * endpoint value is infinite or the proposal leaves the bracket. `accept(x, f)` is the
 * caller's stopping rule; iteration also stops once the bracket collapses to
 * `x_tol`.
 *
 * Returns the last accepted sample (or the best endpoint on collapse).
 */
template <class F, class Accept>
BracketSample bracketed_solve(F&& f, BracketSample lo, BracketSample hi, Accept&& accept, double x_tol,
                              int max_iter, std::vector<BracketSample>* trace = nullptr) {
  if (std::signbit(lo.f) == std::signbit(hi.f)) {
    throw DomainError("bracketed_solve: endpoints do not bracket a root");
  }
  int retained_side = 0;  // -1: lo kept twice in a row, +1: hi kept twice
  double scaled_lo = lo.f;
  double scaled_hi = hi.f;

  for (int it = 0; it < max_iter; ++it) {
    const double width = std::abs(hi.x - lo.x);
    if (width <= x_tol) break;

    double x = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(scaled_lo) && std::isfinite(scaled_hi)) {
      x = hi.x - scaled_hi * (hi.x - lo.x) / (scaled_hi - scaled_lo);
    }
    const double lo_x = std::min(lo.x, hi.x);
    const double hi_x = std::max(lo.x, hi.x);
    if (!(x > lo_x && x < hi_x)) {
      x = 0.5 * (lo.x + hi.x);
    }

    const double fx = f(x);
    const BracketSample sample{x, fx};
    if (trace) trace->push_back(sample);
    if (accept(x, fx)) return sample;

    if (std::signbit(fx) == std::signbit(lo.f)) {
      lo = sample;
      scaled_lo = fx;
      if (retained_side == 1) scaled_hi *= 0.5;
      retained_side = 1;
    } else {
      hi = sample;
      scaled_hi = fx;
      if (retained_side == -1) scaled_lo *= 0.5;
      retained_side = -1;
    }
  }
  if (std::abs(hi.x - lo.x) <= x_tol) {
    return std::abs(lo.f) <= std::abs(hi.f) ? lo : hi;
  }
  throw NoConvergenceError("bracketed_solve: iteration limit reached");
}

/// Adaptive Gauss-Kronrod (15 point) quadrature on [lo, hi]; either bound may be infinite.
inline double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-12,
                        double* error_estimate = nullptr) {
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 18, rel_tol, &err);
  if (error_estimate) *error_estimate = err;
  return value;
}

/// E[g(Z)] for a standard normal Z by adaptive quadrature.
///
/// The density underflows past |z| = 38, so the range is truncated there;
/// g is never evaluated at the extreme arguments an infinite-interval map would produce.
inline double normal_expectation(const std::function<double(double)>& g, double rel_tol = 1e-12) {
  constexpr double edge = 38.0;
  auto integrand = [&](double z) { return g(z) * normal_pdf(z); };
  return integrate(integrand, -edge, -8.0, rel_tol) + integrate(integrand, -8.0, 0.0, rel_tol) +
         integrate(integrand, 0.0, 8.0, rel_tol) + integrate(integrand, 8.0, edge, rel_tol);
}

}  // namespace werm::numeric
