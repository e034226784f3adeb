#pragma once

#include <stdexcept>
#include <string>

namespace werm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-state vectors whose lengths disagree with the probability space.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of iterations without converging or diverging.
class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid solver or run configuration (including failed bracket expansion).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The risk cap lies below the minimal attainable risk for the budget.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double gamma1, double gamma2)
      : Error(what), gamma1_(gamma1), gamma2_(gamma2) {}

  [[nodiscard]] double gamma1() const { return gamma1_; }
  [[nodiscard]] double gamma2() const { return gamma2_; }

 private:
  double gamma1_;
  double gamma2_;
};

}  // namespace werm
