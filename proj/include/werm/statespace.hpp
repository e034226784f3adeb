#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "werm/errors.hpp"
#include "werm/numeric.hpp"

namespace werm {

/// One state of a finite market: its probability and the SDF value there.
struct State {
  double probability;
  double sdf;
};

/**
 * A finite probability space carrying a stochastic discount factor.
 *
 * States are kept in canonical order (SDF nondecreasing). Every expectation
 * in the library is an exact compensated sum over these states, taken in
 * ascending index order.
 */
class ProbSpace {
 public:
  /// Validates and stores states, which must already be sorted by SDF.
  explicit ProbSpace(std::vector<State> states) {
    if (states.empty()) throw DomainError("ProbSpace: at least one state is required");
    numeric::CompensatedSum total;
    probabilities_.reserve(states.size());
    sdfs_.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& s = states[i];
      if (!(s.probability > 0.0 && s.probability <= 1.0)) {
        throw DomainError("ProbSpace: state " + std::to_string(i) + " has probability outside (0, 1]");
      }
      if (!(s.sdf > 0.0) || !std::isfinite(s.sdf)) {
        throw DomainError("ProbSpace: state " + std::to_string(i) + " has a non-positive or non-finite SDF");
      }
      if (i > 0 && s.sdf < states[i - 1].sdf) {
        throw DomainError("ProbSpace: states must be sorted by nondecreasing SDF");
      }
      total.add(s.probability);
      probabilities_.push_back(s.probability);
      sdfs_.push_back(s.sdf);
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
      throw DomainError("ProbSpace: probabilities must sum to 1 (got " + std::to_string(total.value()) + ")");
    }
    numeric::CompensatedSum mean;
    for (std::size_t i = 0; i < sdfs_.size(); ++i) mean.add(probabilities_[i] * sdfs_[i]);
    mean_sdf_ = mean.value();
  }

  /// Sorts by SDF first; use when the caller has no per-state data to keep aligned.
  static ProbSpace from_unsorted(std::vector<State> states) {
    std::stable_sort(states.begin(), states.end(), [](const State& l, const State& r) { return l.sdf < r.sdf; });
    return ProbSpace(std::move(states));
  }

  [[nodiscard]] std::size_t size() const { return sdfs_.size(); }
  [[nodiscard]] double probability(std::size_t i) const { return probabilities_[i]; }
  [[nodiscard]] double sdf(std::size_t i) const { return sdfs_[i]; }
  [[nodiscard]] std::span<const double> probabilities() const { return probabilities_; }
  [[nodiscard]] std::span<const double> sdfs() const { return sdfs_; }
  /// E[rho].
  [[nodiscard]] double mean_sdf() const { return mean_sdf_; }

 private:
  std::vector<double> probabilities_;
  std::vector<double> sdfs_;
  double mean_sdf_ = 0.0;
};

/// Nonnegative terminal wealth, one value per state.
class Payoff {
 public:
  Payoff() = default;

  explicit Payoff(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
        throw DomainError("Payoff: entry " + std::to_string(i) + " is negative or not finite");
      }
    }
  }

  static Payoff zeros(std::size_t n) { return Payoff(std::vector<double>(n, 0.0)); }
  static Payoff constant(std::size_t n, double c) { return Payoff(std::vector<double>(n, c)); }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }
  [[nodiscard]] double min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }

  friend bool operator==(const Payoff&, const Payoff&) = default;

 private:
  std::vector<double> values_;
};

/// log(rho) ~ N(b, sigma^2).
struct LogNormalSDF {
  double b = 0.0;
  double sigma = 1.0;

  LogNormalSDF() = default;
  LogNormalSDF(double log_mean, double log_std) : b(log_mean), sigma(log_std) {
    if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(b)) {
      throw DomainError("LogNormalSDF: sigma must be positive and parameters finite");
    }
  }

  [[nodiscard]] double mean() const { return std::exp(b + 0.5 * sigma * sigma); }
  [[nodiscard]] double at(double z) const { return std::exp(b + sigma * z); }
};

inline void require_dimension(const ProbSpace& space, std::size_t n, const char* what) {
  if (n != space.size()) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(space.size()) + " per-state values, got " +
                         std::to_string(n));
  }
}

/// E[values] as a compensated sum in ascending state order.
inline double expectation(const ProbSpace& space, std::span<const double> values) {
  require_dimension(space, values.size(), "expectation");
  numeric::CompensatedSum sum;
  const auto p = space.probabilities();
  for (std::size_t i = 0; i < values.size(); ++i) sum.add(p[i] * values[i]);
  return sum.value();
}

/// Price of a payoff: E[rho X].
inline double budget(const ProbSpace& space, const Payoff& x_payoff) {
  require_dimension(space, x_payoff.size(), "budget");
  numeric::CompensatedSum sum;
  const auto p = space.probabilities();
  const auto rho = space.sdfs();
  for (std::size_t i = 0; i < x_payoff.size(); ++i) sum.add(p[i] * rho[i] * x_payoff[i]);
  return sum.value();
}

/**
 * Equal-probability quantile discretization of a log-normal SDF.
 *
 * State i (1-based) sits at the midpoint quantile (i - 0.5) / n, which keeps
 * the states sorted by SDF.
 */
inline ProbSpace discretize_lognormal(const LogNormalSDF& model, std::size_t n) {
  if (n < 2) throw DomainError("discretize_lognormal: at least two states are required");
  std::vector<State> states(n);
  const double p = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    states[i] = State{p, model.at(numeric::normal_quantile(u))};
  }
  return ProbSpace(std::move(states));
}

/// P(rho <= z) for the log-normal model.
inline double sdf_cdf(const LogNormalSDF& model, double z) {
  if (z <= 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  return numeric::normal_cdf((std::log(z) - model.b) / model.sigma);
}

/// Density of rho under the log-normal model.
inline double sdf_pdf(const LogNormalSDF& model, double z) {
  if (z <= 0.0 || std::isinf(z)) return 0.0;
  const double u = (std::log(z) - model.b) / model.sigma;
  return numeric::normal_pdf(u) / (z * model.sigma);
}

/// P(rho <= z) on a finite space (right-continuous step function).
inline double sdf_cdf(const ProbSpace& space, double z) {
  const auto rho = space.sdfs();
  const auto end = std::upper_bound(rho.begin(), rho.end(), z);
  numeric::CompensatedSum sum;
  const auto p = space.probabilities();
  for (std::size_t i = 0; i < static_cast<std::size_t>(end - rho.begin()); ++i) sum.add(p[i]);
  return std::min(1.0, sum.value());
}

/**
 * Product of two independent finite spaces.
 *
 * `origin[k]` names the pair of factor states behind product state k, so
 * payoffs defined on either factor can be lifted onto the (re-sorted) product.
 */
struct ProductSpace {
  ProbSpace space;
  std::vector<std::pair<std::size_t, std::size_t>> origin;

  /// Lift X on the first factor and Y on the second to X + Y on the product.
  [[nodiscard]] std::vector<double> lift_sum(std::span<const double> x, std::span<const double> y) const {
    std::vector<double> out(origin.size());
    for (std::size_t k = 0; k < origin.size(); ++k) out[k] = x[origin[k].first] + y[origin[k].second];
    return out;
  }
};

inline ProductSpace product_space(const ProbSpace& first, const ProbSpace& second) {
  struct Entry {
    State state;
    std::pair<std::size_t, std::size_t> origin;
  };
  std::vector<Entry> entries;
  entries.reserve(first.size() * second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t j = 0; j < second.size(); ++j) {
      entries.push_back(
          {State{first.probability(i) * second.probability(j), first.sdf(i) * second.sdf(j)}, {i, j}});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& l, const Entry& r) { return l.state.sdf < r.state.sdf; });
  std::vector<State> states;
  std::vector<std::pair<std::size_t, std::size_t>> origin;
  for (const auto& e : entries) {
    states.push_back(e.state);
    origin.push_back(e.origin);
  }
  // Products of normalized probabilities can drift from 1 by a few ulps per state.
  numeric::CompensatedSum total;
  for (const auto& s : states) total.add(s.probability);
  for (auto& s : states) s.probability /= total.value();
  return ProductSpace{ProbSpace(std::move(states)), std::move(origin)};
}

}  // namespace werm
