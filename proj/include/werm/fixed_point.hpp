#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "werm/errors.hpp"
#include "werm/measure.hpp"
#include "werm/risk.hpp"
#include "werm/statespace.hpp"

namespace werm {

/// Stopping and divergence thresholds shared by both monotone iterations.
struct FixedPointConfig {
  double tol_payoff = 1e-10;        ///< sup-norm step that counts as converged
  int max_iter = 10000;
  double divergence_floor = 1e-300; ///< min_a varphi(a) below this signals an infinite limit

  void validate() const {
    if (!(tol_payoff > 0.0)) throw ConfigError("FixedPointConfig: tol_payoff must be positive");
    if (max_iter < 1) throw ConfigError("FixedPointConfig: max_iter must be at least 1");
    if (!(divergence_floor > 0.0)) throw ConfigError("FixedPointConfig: divergence_floor must be positive");
  }
};

enum class FixedPointStatus {
  converged,
  diverged,         ///< the monotone limit has infinite price
  exceeded_budget,  ///< stopped early: an iterate already costs more than the caller's cap
};

struct FixedPointResult {
  FixedPointStatus status = FixedPointStatus::converged;
  Payoff payoff;                   ///< last iterate (the limit when converged)
  std::vector<double> log_varphi;  ///< log E[exp(-a X)] of `payoff`, per atom
  std::vector<double> roots;       ///< unclipped per-state roots behind `payoff`
  int iterations = 0;              ///< transform applications, accelerated ones included
  double last_step = 0.0;
  std::string detail;

  [[nodiscard]] bool converged() const { return status == FixedPointStatus::converged; }
};

/// Called with (iteration index, iterate) after every transform application.
using IterateObserver = std::function<void(int, const Payoff&)>;

namespace detail {

/**
 * One application of a monotone transform.
 *
 * A kernel maps (state, psi_X, warm root) to the unclipped per-state root and
 * clips it into the payoff; the transform only sees X through varphi_X, which
 * is why everything here is keyed on the log-varphi vector.
 */
template <class Kernel>
void apply_transform(const Kernel& kernel, const WeightingMeasure& m, const std::vector<double>& log_varphi,
                     std::vector<double>& roots, std::vector<double>& payoff) {
  const PsiFunction psi(m, log_varphi);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    roots[i] = kernel.root(i, psi, roots[i]);
    payoff[i] = kernel.clip(roots[i]);
  }
}

inline double min_value(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

inline double sup_step(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

/**
 * Plain iteration X_{n+1} = T X_n from `start`.
 *
 * From a subsolution (X_0 <= T X_0, e.g. X_0 = 0) the iterates are
 * nondecreasing, so a finite limit exists iff the prices stay bounded. Two
 * guards stand in for the infinite-price test: varphi underflowing the floor
 * and the price exceeding 1 / floor.
 */
template <class Kernel>
FixedPointResult iterate_plain(const Kernel& kernel, const WeightingMeasure& m, const ProbSpace& space,
                               const Payoff& start, const FixedPointConfig& cfg, const IterateObserver& observer,
                               double budget_cap = std::numeric_limits<double>::infinity(),
                               std::vector<double> warm_roots = {}) {
  cfg.validate();
  require_dimension(space, start.size(), "fixed point start");
  const double log_floor = std::log(cfg.divergence_floor);
  const double price_cap = 1.0 / cfg.divergence_floor;

  std::vector<double> current(start.values().begin(), start.values().end());
  std::vector<double> next(current.size());
  std::vector<double> roots = warm_roots.size() == current.size()
                                  ? std::move(warm_roots)
                                  : std::vector<double>(current.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> lv = detail::log_varphi(m, space, current);

  FixedPointResult result;
  for (int n = 1; n <= cfg.max_iter; ++n) {
    apply_transform(kernel, m, lv, roots, next);
    result.last_step = sup_step(next, current);
    std::swap(current, next);
    lv = detail::log_varphi(m, space, current);
    result.iterations = n;

    Payoff iterate(current);
    if (observer) observer(n, iterate);
    const double price = budget(space, iterate);

    auto finish = [&](FixedPointStatus status, std::string detail_text) {
      result.status = status;
      result.payoff = std::move(iterate);
      result.log_varphi = lv;
      result.roots = roots;
      result.detail = std::move(detail_text);
      return result;
    };
    if (min_value(lv) < log_floor || !std::isfinite(price) || price > price_cap) {
      return finish(FixedPointStatus::diverged, "iterates grow without bound (varphi underflow or price blow-up)");
    }
    if constexpr (Kernel::shift_equivariant) {
      // T(X + c) = T X + c while no root is clipped, so a uniform rise
      // X_{n+1} >= X_n + d with every root positive repeats forever.
      double rise = std::numeric_limits<double>::infinity();
      double top = 0.0;
      bool all_positive = true;
      for (std::size_t i = 0; i < current.size(); ++i) {
        rise = std::min(rise, current[i] - next[i]);
        top = std::max(top, current[i]);
        all_positive = all_positive && roots[i] > 0.0;
      }
      if (all_positive && rise > std::max(cfg.tol_payoff, 1e-9 * (1.0 + top))) {
        return finish(FixedPointStatus::diverged, "iterates rise uniformly in every state (linear growth)");
      }
    }
    if (price > budget_cap) return finish(FixedPointStatus::exceeded_budget, "iterate price exceeds cap");
    if (result.last_step <= cfg.tol_payoff) return finish(FixedPointStatus::converged, "");
  }
  throw NoConvergenceError("fixed-point iteration: no convergence after " + std::to_string(cfg.max_iter) +
                           " iterations (last sup-norm step " + std::to_string(result.last_step) + ")");
}

/**
 * Anderson-accelerated solve of the same fixed point.
 *
 * The transform depends on X only through the K-vector log varphi_X, so the
 * acceleration runs on that vector (memory min(K, 5)). The accelerated point
 * is then certified by plain transform steps until the sup-norm step meets
 * cfg.tol_payoff. If acceleration stalls or leaves the domain the solve
 * falls back to the plain monotone iteration from `start`.
 */
template <class Kernel>
FixedPointResult iterate_accelerated(const Kernel& kernel, const WeightingMeasure& m, const ProbSpace& space,
                                     const Payoff& start, const FixedPointConfig& cfg) {
  cfg.validate();
  const std::size_t k_dim = m.size();
  const std::size_t memory = std::min<std::size_t>(k_dim, 5);
  const double log_floor = std::log(cfg.divergence_floor);
  const double price_cap = 1.0 / cfg.divergence_floor;
  constexpr double residual_tol = 1e-13;
  const int max_evaluations = std::min(400, cfg.max_iter);

  std::vector<double> roots(space.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> payoff(space.size());

  Eigen::VectorXd current = Eigen::Map<const Eigen::VectorXd>(
      detail::log_varphi(m, space, start.values()).data(), static_cast<Eigen::Index>(k_dim));
  std::deque<Eigen::VectorXd> d_residual;
  std::deque<Eigen::VectorXd> d_image;
  Eigen::VectorXd prev_residual;
  Eigen::VectorXd prev_image;
  double best_norm = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_point = current;
  bool ok = false;

  int evaluations = 0;
  for (; evaluations < max_evaluations; ++evaluations) {
    std::vector<double> lv(current.data(), current.data() + k_dim);
    apply_transform(kernel, m, lv, roots, payoff);
    const double price = budget(space, Payoff(payoff));
    if (!std::isfinite(price) || price > price_cap) break;
    const auto image_lv = detail::log_varphi(m, space, payoff);
    Eigen::VectorXd image = Eigen::Map<const Eigen::VectorXd>(image_lv.data(), static_cast<Eigen::Index>(k_dim));
    if (image.minCoeff() < log_floor || !image.allFinite()) break;
    const Eigen::VectorXd residual = image - current;
    const double norm = residual.lpNorm<Eigen::Infinity>();
    if (norm <= residual_tol) {
      ok = true;
      current = image;
      break;
    }
    if (norm < best_norm) {
      best_norm = norm;
      best_point = image;
    } else if (norm > 10.0 * best_norm) {
      // Restart from the best plain image seen so far.
      d_residual.clear();
      d_image.clear();
      prev_residual.resize(0);
      current = best_point;
      continue;
    }
    if (prev_residual.size() > 0) {
      d_residual.push_back(residual - prev_residual);
      d_image.push_back(image - prev_image);
      if (d_residual.size() > memory) {
        d_residual.pop_front();
        d_image.pop_front();
      }
    }
    prev_residual = residual;
    prev_image = image;

    if (d_residual.empty()) {
      current = image;
      continue;
    }
    const auto cols = static_cast<Eigen::Index>(d_residual.size());
    Eigen::MatrixXd df(static_cast<Eigen::Index>(k_dim), cols);
    Eigen::MatrixXd dg(static_cast<Eigen::Index>(k_dim), cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      df.col(c) = d_residual[static_cast<std::size_t>(c)];
      dg.col(c) = d_image[static_cast<std::size_t>(c)];
    }
    const Eigen::VectorXd gamma = df.colPivHouseholderQr().solve(residual);
    Eigen::VectorXd proposal = image - dg * gamma;
    if (!proposal.allFinite()) {
      d_residual.clear();
      d_image.clear();
      proposal = image;
    }
    current = proposal;
  }

  if (ok) {
    // Certify with plain steps from the accelerated point.
    std::vector<double> lv(current.data(), current.data() + k_dim);
    apply_transform(kernel, m, lv, roots, payoff);
    auto certified = iterate_plain(kernel, m, space, Payoff(payoff), cfg, {}, std::numeric_limits<double>::infinity(),
                                   roots);
    certified.iterations += evaluations + 1;
    if (certified.converged()) return certified;
  }
  auto plain = iterate_plain(kernel, m, space, start, cfg, {});
  plain.iterations += evaluations;
  return plain;
}

}  // namespace detail
}  // namespace werm
