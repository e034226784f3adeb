#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "werm/errors.hpp"
#include "werm/numeric.hpp"

namespace werm {

/// One atom of the weighting measure: risk aversion `exponent` carrying mass `weight`.
struct Atom {
  double exponent;
  double weight;
};

/**
 * Finite weighting measure over entropic risk-aversion parameters.
 *
 * Canonical form: exponents strictly increasing, duplicates merged by adding
 * their weights. All exponents lie in (0, inf) and the weights sum to one.
 */
class WeightingMeasure {
 public:
  explicit WeightingMeasure(std::vector<Atom> atoms) {
    if (atoms.empty()) throw DomainError("WeightingMeasure: at least one atom is required");
    for (const auto& atom : atoms) {
      if (!(atom.exponent > 0.0) || !std::isfinite(atom.exponent)) {
        throw DomainError("WeightingMeasure: atom exponents must be positive and finite");
      }
      if (!(atom.weight > 0.0) || !std::isfinite(atom.weight)) {
        throw DomainError("WeightingMeasure: atom weights must be positive");
      }
    }
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.exponent < r.exponent; });
    numeric::CompensatedSum total;
    for (const auto& atom : atoms) {
      total.add(atom.weight);
      if (!atoms_.empty() && atoms_.back().exponent == atom.exponent) {
        atoms_.back().weight += atom.weight;
      } else {
        atoms_.push_back(atom);
      }
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
      throw DomainError("WeightingMeasure: weights must sum to 1 (got " + std::to_string(total.value()) + ")");
    }
  }

  /// Point mass at a single exponent (the plain entropic risk measure).
  static WeightingMeasure single(double a) { return WeightingMeasure({Atom{a, 1.0}}); }

  /// Uniform weights on `count` equally spaced exponents from a0 to a1 inclusive.
  static WeightingMeasure uniform_grid(double a0, double a1, std::size_t count) {
    if (count == 0) throw DomainError("WeightingMeasure::uniform_grid: count must be positive");
    if (count == 1 || a0 == a1) return single(a0);
    if (!(a1 > a0)) throw DomainError("WeightingMeasure::uniform_grid: a1 must exceed a0");
    std::vector<Atom> atoms;
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(count - 1);
      atoms.push_back(Atom{a0 + (a1 - a0) * t, w});
    }
    // Rounding in w * count; renormalize exactly.
    numeric::CompensatedSum total;
    for (const auto& a : atoms) total.add(a.weight);
    for (auto& a : atoms) a.weight /= total.value();
    return WeightingMeasure(std::move(atoms));
  }

  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }
  [[nodiscard]] double a0() const { return atoms_.front().exponent; }
  [[nodiscard]] double a1() const { return atoms_.back().exponent; }

 private:
  std::vector<Atom> atoms_;
};

}  // namespace werm
