#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "werm/errors.hpp"
#include "werm/measure.hpp"
#include "werm/search.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"

namespace werm::cli {

enum class Method { automatic, closed_form, iterative };
enum class Format { csv, json, both };

struct SdfSection {
  bool lognormal = true;
  LogNormalSDF model{-0.5, 1.0};
  std::size_t states = 10000;  ///< quantile grid size for the log-normal model
  std::vector<State> discrete;

  [[nodiscard]] ProbSpace space() const {
    return lognormal ? discretize_lognormal(model, states) : ProbSpace::from_unsorted(discrete);
  }
};

struct RunConfig {
  SdfSection sdf;
  std::optional<WeightingMeasure> measure;
  std::optional<UtilityFunction> utility;
  std::optional<double> budget;
  std::optional<double> gamma;
  SolverConfig solver;
  Method method = Method::automatic;
  std::string out_dir = ".";
  std::string prefix = "werm";
  Format format = Format::both;
  std::vector<double> frontier_budgets;
};

inline Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  if (name == "both") return Format::both;
  throw ConfigError("output format must be csv, json or both (got '" + name + "')");
}

namespace detail {

using nlohmann::json;

inline const json& section(const json& root, const char* key) {
  if (!root.contains(key)) throw ConfigError(std::string("missing section '") + key + "'");
  const auto& s = root.at(key);
  if (!s.is_object()) throw ConfigError(std::string("section '") + key + "' must be an object");
  return s;
}

inline double number(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string(where) + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline double positive(const json& obj, const char* key, const char* where) {
  const double v = number(obj, key, where);
  if (!(v > 0.0)) throw ConfigError(std::string(where) + ": '" + key + "' must be positive");
  return v;
}

inline std::string text(const json& obj, const char* key, const char* where, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(std::string(where) + ": '" + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

inline SdfSection parse_sdf(const json& s) {
  SdfSection out;
  const auto kind = text(s, "kind", "sdf", "lognormal");
  if (kind == "lognormal") {
    out.model = LogNormalSDF(number(s, "b", "sdf"), positive(s, "sigma", "sdf"));
    if (s.contains("states")) {
      const double n = positive(s, "states", "sdf");
      if (n < 2.0 || n != static_cast<double>(static_cast<std::size_t>(n))) {
        throw ConfigError("sdf: 'states' must be an integer of at least 2");
      }
      out.states = static_cast<std::size_t>(n);
    }
  } else if (kind == "discrete") {
    out.lognormal = false;
    if (!s.contains("states") || !s.at("states").is_array() || s.at("states").empty()) {
      throw ConfigError("sdf: discrete kind needs a non-empty 'states' array");
    }
    for (const auto& st : s.at("states")) {
      out.discrete.push_back({positive(st, "probability", "sdf.states"), positive(st, "sdf", "sdf.states")});
    }
  } else {
    throw ConfigError("sdf: kind must be lognormal or discrete (got '" + kind + "')");
  }
  return out;
}

inline WeightingMeasure parse_measure(const json& s) {
  const auto kind = text(s, "kind", "measure", "atoms");
  if (kind == "atoms") {
    if (!s.contains("atoms") || !s.at("atoms").is_array() || s.at("atoms").empty()) {
      throw ConfigError("measure: 'atoms' must be a non-empty array");
    }
    std::vector<Atom> atoms;
    for (const auto& a : s.at("atoms")) {
      atoms.push_back({positive(a, "a", "measure.atoms"), positive(a, "weight", "measure.atoms")});
    }
    return WeightingMeasure(std::move(atoms));
  }
  if (kind == "uniform_grid") {
    const double count = positive(s, "count", "measure");
    if (count != static_cast<double>(static_cast<std::size_t>(count))) {
      throw ConfigError("measure: 'count' must be an integer");
    }
    return WeightingMeasure::uniform_grid(positive(s, "a0", "measure"), positive(s, "a1", "measure"),
                                          static_cast<std::size_t>(count));
  }
  throw ConfigError("measure: kind must be atoms or uniform_grid (got '" + kind + "')");
}

inline UtilityFunction parse_utility(const json& s) {
  const auto kind = text(s, "kind", "utility", "");
  if (kind == "log") return UtilityFunction::log();
  if (kind == "power") return UtilityFunction::power(positive(s, "r", "utility"));
  throw ConfigError("utility: kind must be log or power (got '" + kind + "')");
}

inline void parse_solver(const json& s, RunConfig& cfg) {
  if (s.contains("tol_payoff")) cfg.solver.fixed_point.tol_payoff = positive(s, "tol_payoff", "solver");
  if (s.contains("max_iter")) cfg.solver.fixed_point.max_iter = static_cast<int>(positive(s, "max_iter", "solver"));
  if (s.contains("bisect_tol")) cfg.solver.budget_rel_tol = positive(s, "bisect_tol", "solver");
  if (s.contains("budget_rel_tol")) cfg.solver.budget_rel_tol = positive(s, "budget_rel_tol", "solver");
  if (s.contains("risk_tol")) cfg.solver.risk_tol = positive(s, "risk_tol", "solver");
  const auto method = text(s, "method", "solver", "auto");
  if (method == "auto") cfg.method = Method::automatic;
  else if (method == "closed_form") cfg.method = Method::closed_form;
  else if (method == "iterative") cfg.method = Method::iterative;
  else throw ConfigError("solver: method must be auto, closed_form or iterative (got '" + method + "')");
  cfg.solver.validate();
}

inline std::vector<double> parse_frontier(const json& s) {
  std::vector<double> budgets;
  if (s.contains("budgets")) {
    if (!s.at("budgets").is_array()) throw ConfigError("frontier: 'budgets' must be an array");
    for (const auto& v : s.at("budgets")) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("frontier: budgets must be positive numbers");
      budgets.push_back(v.get<double>());
    }
  } else {
    const double from = positive(s, "from", "frontier");
    const double to = positive(s, "to", "frontier");
    const double step = positive(s, "step", "frontier");
    if (to < from) throw ConfigError("frontier: 'to' must not be below 'from'");
    const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) budgets.push_back(from + static_cast<double>(k) * step);
  }
  if (budgets.empty()) throw ConfigError("frontier: no budgets given");
  std::sort(budgets.begin(), budgets.end());
  return budgets;
}

}  // namespace detail

/// Parses a JSON config document. Every section is optional here; run() checks what a subcommand needs.
inline RunConfig parse_config(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig cfg;
  try {
    if (root.contains("sdf")) cfg.sdf = detail::parse_sdf(detail::section(root, "sdf"));
    if (root.contains("measure")) cfg.measure = detail::parse_measure(detail::section(root, "measure"));
    if (root.contains("utility")) cfg.utility = detail::parse_utility(detail::section(root, "utility"));
    if (root.contains("problem")) {
      const auto& p = detail::section(root, "problem");
      if (p.contains("budget")) cfg.budget = detail::positive(p, "budget", "problem");
      if (p.contains("gamma")) cfg.gamma = detail::number(p, "gamma", "problem");
    }
    if (root.contains("solver")) detail::parse_solver(detail::section(root, "solver"), cfg);
    if (root.contains("output")) {
      const auto& o = detail::section(root, "output");
      cfg.out_dir = detail::text(o, "dir", "output", cfg.out_dir);
      cfg.prefix = detail::text(o, "prefix", "output", cfg.prefix);
      if (o.contains("format")) cfg.format = parse_format(detail::text(o, "format", "output", "both"));
    }
    if (root.contains("frontier")) cfg.frontier_budgets = detail::parse_frontier(detail::section(root, "frontier"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace werm::cli
