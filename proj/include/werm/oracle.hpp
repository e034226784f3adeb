#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "werm/errors.hpp"
#include "werm/measure.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

// Brute-force solvers for tiny spaces. They share nothing with the fixed-point
// machinery: risk values and gradients are recomputed here from scratch.
namespace werm::oracle {

inline constexpr std::size_t max_states = 8;

struct OracleConfig {
  double step_tol = 1e-7;   ///< a sweep ends only once every payoff move falls below this
  double gap_tol = 1e-13;   ///< optimality gap between the best and worst pairwise scores
  int max_refine = 400000;  ///< pairwise updates allowed per solve

  void validate() const {
    if (!(step_tol > 0.0)) throw ConfigError("OracleConfig: step_tol must be positive");
    if (!(gap_tol > 0.0)) throw ConfigError("OracleConfig: gap_tol must be positive");
    if (max_refine < 1) throw ConfigError("OracleConfig: max_refine must be positive");
  }
};

namespace detail {

/// Plain-sum WERM; fine for the small, bounded payoffs the oracle sees.
inline double risk(const WeightingMeasure& m, const ProbSpace& space, const std::vector<double>& x) {
  double total = 0.0;
  for (const auto& atom : m.atoms()) {
    double mgf = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mgf += space.probability(i) * std::exp(-atom.exponent * x[i]);
    total += atom.weight * std::log(mgf) / atom.exponent;
  }
  return total;
}

/// dh/dX_i divided by P(i): -sum_j w_j exp(-a_j X_i) / E[exp(-a_j X)].
inline std::vector<double> risk_gradient(const WeightingMeasure& m, const ProbSpace& space,
                                         const std::vector<double>& x) {
  std::vector<double> g(x.size(), 0.0);
  for (const auto& atom : m.atoms()) {
    double mgf = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mgf += space.probability(i) * std::exp(-atom.exponent * x[i]);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] -= atom.weight * std::exp(-atom.exponent * x[i]) / mgf;
  }
  return g;
}

inline void require_small(const ProbSpace& space, double x_budget) {
  if (space.size() > max_states) throw DimensionError("oracle: at most 8 states are supported");
  if (!(x_budget > 0.0)) throw DomainError("oracle: budget must be positive");
}

/**
 * Pairwise coordinate descent on the budget slice E[rho X] = x.
 *
 * Moving t units of money from state j to state i changes X_i by
 * t / (p_i rho_i) and X_j by -t / (p_j rho_j). `score(x)` returns the
 * per-unit-money marginal gain of each state; the most and least attractive
 * states form the working pair and the 1-D step is found by bisection on the
 * directional derivative, which is monotone because the objective is concave.
 * `floor_ok` says whether X_j may reach exactly zero.
 */
template <class Score>
std::vector<double> pairwise_ascent(const ProbSpace& space, std::vector<double> x, Score&& score, bool floor_ok,
                                    const OracleConfig& cfg) {
  const std::size_t n = space.size();
  if (n == 1) return x;
  double recent_move = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_refine; ++it) {
    const auto s = score(x);
    std::size_t up = 0;
    std::size_t down = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (s[k] > s[up]) up = k;
      if (x[k] > 0.0 && (down == n || s[k] < s[down])) down = k;
    }
    const double gap = s[up] - s[down];
    if (down == n || up == down || (gap <= cfg.gap_tol * (1.0 + std::abs(s[up])) && recent_move <= cfg.step_tol)) {
      return x;
    }
    const double du = 1.0 / (space.probability(up) * space.sdf(up));
    const double dd = 1.0 / (space.probability(down) * space.sdf(down));
    const double t_max = x[down] / dd;
    auto trial = [&](double t) {
      std::vector<double> y = x;
      y[up] += t * du;
      y[down] = std::max(y[down] - t * dd, 0.0);
      return y;
    };
    auto slope = [&](double t) {
      const auto y = trial(t);
      if (!floor_ok && !(y[down] > 0.0)) return -std::numeric_limits<double>::infinity();
      const auto sy = score(y);
      return sy[up] - sy[down];
    };
    double lo = 0.0;
    double hi = t_max;
    if (floor_ok && slope(hi) >= 0.0) {
      lo = hi;
    } else {
      for (int b = 0; b < 200 && hi - lo > 1e-17 * (1.0 + t_max); ++b) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) > 0.0) lo = mid;
        else hi = mid;
      }
    }
    const double t = floor_ok && lo == t_max ? t_max : 0.5 * (lo + hi);
    x = trial(t);
    if (floor_ok && t == t_max) x[down] = 0.0;
    recent_move = t * std::max(du, dd);
  }
  throw NoConvergenceError("oracle: pairwise refinement did not converge within max_refine updates");
}

}  // namespace detail

/// min h(X) over X >= 0, E[rho X] = x on a space of at most 8 states.
inline Payoff brute_force_risk_min(const WeightingMeasure& m, const ProbSpace& space, double x_budget,
                                   const OracleConfig& cfg = {}) {
  cfg.validate();
  detail::require_small(space, x_budget);
  std::vector<double> start(space.size(), x_budget / space.mean_sdf());
  auto score = [&](const std::vector<double>& x) {
    auto g = detail::risk_gradient(m, space, x);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = -g[k] / space.sdf(k);
    return g;
  };
  return Payoff(detail::pairwise_ascent(space, std::move(start), score, true, cfg));
}

/// max E[U(X)] - mu h(X) over X > 0, E[rho X] = x. mu = 0 gives the unconstrained optimizer.
inline Payoff brute_force_penalized_eu(const WeightingMeasure& m, const ProbSpace& space, const UtilityFunction& u,
                                       double x_budget, double mu, const OracleConfig& cfg = {},
                                       const std::vector<double>& warm = {}) {
  cfg.validate();
  detail::require_small(space, x_budget);
  std::vector<double> start = warm.size() == space.size() ? warm : std::vector<double>(space.size(), x_budget / space.mean_sdf());
  auto score = [&](const std::vector<double>& x) {
    std::vector<double> s(x.size());
    const auto g = mu > 0.0 ? detail::risk_gradient(m, space, x) : std::vector<double>(x.size(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) s[k] = (u.marginal(x[k]) - mu * g[k]) / space.sdf(k);
    return s;
  };
  return Payoff(detail::pairwise_ascent(space, std::move(start), score, false, cfg));
}

struct OracleBounds {
  double gamma1;
  double gamma2;
};

inline OracleBounds oracle_bounds(const WeightingMeasure& m, const ProbSpace& space, const UtilityFunction& u,
                                  double x_budget, const OracleConfig& cfg = {}) {
  const auto rm = brute_force_risk_min(m, space, x_budget, cfg);
  const auto un = brute_force_penalized_eu(m, space, u, x_budget, 0.0, cfg);
  return {detail::risk(m, space, std::vector<double>(rm.values().begin(), rm.values().end())),
          detail::risk(m, space, std::vector<double>(un.values().begin(), un.values().end()))};
}

/**
 * max E[U(X)] over X > 0 with E[rho X] = x and h(X) = gamma.
 *
 * The risk constraint is handled by its multiplier: h(X_mu) of the penalized
 * maximizer decreases in mu, so mu is bisected on a log scale until the risk
 * matches gamma, each inner solve warm-started from the previous one.
 */
inline Payoff brute_force_eu_max(const WeightingMeasure& m, const ProbSpace& space, const UtilityFunction& u,
                                 double x_budget, double gamma, const OracleConfig& cfg = {}) {
  const auto bounds = oracle_bounds(m, space, u, x_budget, cfg);
  if (!(gamma > bounds.gamma1 && gamma < bounds.gamma2)) {
    throw InfeasibleError("oracle: gamma must lie strictly between gamma1 = " + std::to_string(bounds.gamma1) +
                              " and gamma2 = " + std::to_string(bounds.gamma2),
                          bounds.gamma1, bounds.gamma2);
  }
  std::vector<double> current;
  auto solve = [&](double log_mu) {
    const auto p = brute_force_penalized_eu(m, space, u, x_budget, std::exp(log_mu), cfg, current);
    current.assign(p.values().begin(), p.values().end());
    return detail::risk(m, space, current) - gamma;
  };
  double lo = 0.0;
  double hi = 0.0;
  if (solve(0.0) > 0.0) {
    while (solve(hi += 2.0) > 0.0) {
      if (hi > 80.0) throw NoConvergenceError("oracle: mu bracket did not close");
    }
    lo = hi - 2.0;
  } else {
    while (solve(lo -= 2.0) <= 0.0) {
      if (lo < -80.0) throw NoConvergenceError("oracle: mu bracket did not close");
    }
    hi = lo + 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (solve(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  solve(0.5 * (lo + hi));
  return Payoff(current);
}

/// A randomized small instance for cross-checking the solvers.
struct RandomInstance {
  std::uint64_t seed;
  ProbSpace space;
  WeightingMeasure measure;
  double budget;
};

/// Deterministic instance for `seed`: 2..max_states states, 1..max_atoms atoms.
inline RandomInstance random_instance(std::uint64_t seed, std::size_t max_states_n = max_states,
                                      std::size_t max_atoms = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> states(2, std::max<std::size_t>(2, max_states_n));
  std::uniform_int_distribution<std::size_t> atoms_count(1, std::max<std::size_t>(1, max_atoms));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n = states(rng);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) total += (v = 0.2 + unit(rng));
  std::vector<State> st(n);
  for (std::size_t i = 0; i < n; ++i) st[i] = {p[i] / total, std::exp(-0.2 + 0.5 * normal(rng))};
  auto space = ProbSpace::from_unsorted(std::move(st));

  const std::size_t k = atoms_count(rng);
  std::vector<Atom> at(k);
  double wsum = 0.0;
  for (auto& a : at) wsum += (a.weight = 0.1 + unit(rng));
  for (auto& a : at) {
    a.exponent = 0.5 + 3.5 * unit(rng);
    a.weight /= wsum;
  }
  const double budget = 0.5 + 1.5 * unit(rng);
  return {seed, std::move(space), WeightingMeasure(std::move(at)), budget};
}

}  // namespace werm::oracle
