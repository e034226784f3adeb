#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "werm/errors.hpp"

namespace werm {

/**
 * Built-in CRRA utilities: log (relative risk aversion 1) and power
 * U(x) = x^(1-r) / (1-r) for r in (0, 1) or (1, inf).
 *
 * Both satisfy the Inada conditions and have asymptotic elasticity below one,
 * so no runtime certification is performed. Only U', (U')^-1 and U'' enter the
 * solvers; U itself is used for reporting.
 */
class UtilityFunction {
 public:
  enum class Kind { log, power };

  static UtilityFunction log() { return UtilityFunction(Kind::log, 1.0); }

  static UtilityFunction power(double r) {
    if (!(r > 0.0) || r == 1.0 || !std::isfinite(r)) {
      throw DomainError("UtilityFunction::power: relative risk aversion must lie in (0,1) or (1,inf)");
    }
    return UtilityFunction(Kind::power, r);
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  /// Relative risk aversion (1 for log utility).
  [[nodiscard]] double risk_aversion() const { return r_; }

  [[nodiscard]] std::string name() const {
    return kind_ == Kind::log ? std::string("log") : "power(" + std::to_string(r_) + ")";
  }

  [[nodiscard]] double value(double x) const {
    if (kind_ == Kind::log) return std::log(x);
    return std::pow(x, 1.0 - r_) / (1.0 - r_);
  }

  [[nodiscard]] double marginal(double x) const {
    if (kind_ == Kind::log) return 1.0 / x;
    return std::pow(x, -r_);
  }

  [[nodiscard]] double second_derivative(double x) const {
    if (kind_ == Kind::log) return -1.0 / (x * x);
    return -r_ * std::pow(x, -r_ - 1.0);
  }

  /// (U')^-1(z) for z > 0.
  [[nodiscard]] double inverse_marginal(double z) const {
    if (!(z > 0.0)) throw DomainError("UtilityFunction::inverse_marginal: argument must be positive");
    if (kind_ == Kind::log) return 1.0 / z;
    return std::pow(z, -1.0 / r_);
  }

 private:
  UtilityFunction(Kind kind, double r) : kind_(kind), r_(r) {}

  Kind kind_;
  double r_;
};

}  // namespace werm
