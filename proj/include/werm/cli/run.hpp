#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "werm/cli/config.hpp"
#include "werm/closed_form.hpp"
#include "werm/errors.hpp"
#include "werm/eumax.hpp"
#include "werm/integral_system.hpp"
#include "werm/riskmin.hpp"
#include "werm/validate.hpp"

namespace werm::cli {

enum class Command { risk_min, eu_max, frontier, validate };
enum class Which { gamma1, gamma2, both };

struct RunOptions {
  Command command = Command::risk_min;
  Which which = Which::both;
  std::optional<std::string> out_dir;
  std::optional<Format> format;
  std::uint64_t seed = 1;
};

enum ExitCode : int { ok = 0, config_error = 1, infeasible = 2, no_convergence = 3, validation_failed = 4 };

/// %.12g text of a value; the one formatting path for every artifact.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// JSON has no infinities, so those become strings.
inline nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return format_number(v);
  return std::stod(format_number(v));
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

namespace detail {

struct Artifacts {
  std::filesystem::path dir;
  std::string prefix;
  Format format;

  [[nodiscard]] bool csv() const { return format != Format::json; }
  [[nodiscard]] bool json() const { return format != Format::csv; }

  [[nodiscard]] std::filesystem::path path(const std::string& stem, const char* ext) const {
    return dir / (prefix + "_" + stem + ext);
  }

  void write_csv(const std::string& stem, Table table, std::ostream& log) const {
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const auto& l, const auto& r) { return l.front() < r.front(); });
    const auto p = path(stem, ".csv");
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_number(row[k]);
      out << "\n";
    }
    log << "wrote " << p.string() << "\n";
  }

  void write_json(const std::string& stem, const nlohmann::json& doc, std::ostream& log) const {
    const auto p = path(stem, ".json");
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << doc.dump(2) << "\n";
    log << "wrote " << p.string() << "\n";
  }
};

inline Artifacts artifacts(const RunConfig& cfg, const RunOptions& opt) {
  Artifacts a{opt.out_dir.value_or(cfg.out_dir), cfg.prefix, opt.format.value_or(cfg.format)};
  std::error_code ec;
  std::filesystem::create_directories(a.dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + a.dir.string() + "': " + ec.message());
  return a;
}

inline const WeightingMeasure& need_measure(const RunConfig& cfg) {
  if (!cfg.measure) throw ConfigError("this subcommand needs a 'measure' section");
  return *cfg.measure;
}

inline const UtilityFunction& need_utility(const RunConfig& cfg) {
  if (!cfg.utility) throw ConfigError("this subcommand needs a 'utility' section");
  return *cfg.utility;
}

inline double need_budget(const RunConfig& cfg) {
  if (!cfg.budget) throw ConfigError("this subcommand needs problem.budget");
  return *cfg.budget;
}

/// Closed forms exist for a single entropic atom under a log-normal SDF.
inline bool use_closed_form(const RunConfig& cfg) {
  const bool available = cfg.sdf.lognormal && cfg.measure && cfg.measure->size() == 1;
  if (cfg.method == Method::closed_form && !available) {
    throw ConfigError("closed_form needs a log-normal sdf and a single-atom measure");
  }
  return available && cfg.method != Method::iterative;
}

/// Residual of lambda rho >= e^{-aX} / c, with equality where X > 0.
inline double entropic_kkt(const EntropicRiskMin& rm, const ProbSpace& space, const Payoff& x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double density = std::exp(-rm.a * x[i]) / rm.c;
    const double gap = rm.lambda * space.sdf(i) - density;
    worst = std::max(worst, x[i] > 0.0 ? std::abs(gap) : std::max(0.0, -gap));
  }
  return worst;
}

struct Bounds {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

inline double gamma1_at(const RunConfig& cfg, const ProbSpace& space, double x) {
  const auto& m = need_measure(cfg);
  if (use_closed_form(cfg)) return entropic_risk_min_closed_form(m.a0(), cfg.sdf.model, x).gamma1;
  return solve_risk_min(m, space, x, cfg.solver).risk_value;
}

inline double gamma2_at(const RunConfig& cfg, const ProbSpace& space, double x) {
  const auto& m = need_measure(cfg);
  const auto& u = need_utility(cfg);
  if (use_closed_form(cfg)) return lognormal_unconstrained_eu(m, cfg.sdf.model, u, x).gamma2;
  return unconstrained_eu(m, u, space, x).gamma2;
}

inline int run_risk_min(const RunConfig& cfg, const Artifacts& out, std::ostream& log) {
  const auto& m = need_measure(cfg);
  const double x = need_budget(cfg);
  const auto space = cfg.sdf.space();
  nlohmann::json doc;
  doc["budget"] = json_number(x);
  doc["states"] = space.size();
  Table table{{"rho", "x_star"}, {}};
  double gamma1 = 0.0;

  if (use_closed_form(cfg)) {
    const auto rm = entropic_risk_min_closed_form(m.a0(), cfg.sdf.model, x);
    const auto payoff = rm.payoff_on(space);
    const double price = numeric::normal_expectation(
        [&](double z) { return cfg.sdf.model.at(z) * rm.payoff(cfg.sdf.model.at(z)); });
    gamma1 = rm.gamma1;
    doc["method"] = "closed_form";
    doc["lambda_star"] = json_number(rm.lambda);
    doc["gamma1"] = json_number(rm.gamma1);
    doc["threshold_c1"] = json_number(rm.c1);
    doc["budget_residual"] = json_number(price - x);
    doc["kkt_residual"] = json_number(entropic_kkt(rm, space, payoff));
    doc["integral_residual"] =
        json_number(check_integral_system(m, cfg.sdf.model, {std::log(rm.c)}, rm.lambda).max_residual);
    doc["iterations"] = 0;
    for (std::size_t i = 0; i < space.size(); ++i) table.rows.push_back({space.sdf(i), payoff[i]});
  } else {
    const auto rm = solve_risk_min(m, space, x, cfg.solver);
    gamma1 = rm.risk_value;
    doc["method"] = "iterative";
    doc["lambda_star"] = json_number(rm.lambda_star);
    doc["gamma1"] = json_number(rm.risk_value);
    doc["budget_residual"] = json_number(rm.budget_residual);
    doc["kkt_residual"] = json_number(rm.kkt_residual);
    doc["integral_residual"] = json_number(rm.psi_residual);
    doc["iterations"] = rm.iterations;
    for (std::size_t i = 0; i < space.size(); ++i) table.rows.push_back({space.sdf(i), rm.payoff[i]});
  }
  log << "gamma1 = " << format_number(gamma1) << "\n";
  if (cfg.utility) {
    const double g2 = gamma2_at(cfg, space, x);
    doc["gamma2"] = json_number(g2);
    log << "gamma2 = " << format_number(g2) << "\n";
  }
  if (out.json()) out.write_json("risk_min", doc, log);
  if (out.csv()) out.write_csv("risk_min", std::move(table), log);
  return ok;
}

inline int run_eu_max(const RunConfig& cfg, const Artifacts& out, std::ostream& log) {
  const auto& m = need_measure(cfg);
  const auto& u = need_utility(cfg);
  const double x = need_budget(cfg);
  if (!cfg.gamma) throw ConfigError("eu-max needs problem.gamma");
  const double gamma = *cfg.gamma;
  const auto space = cfg.sdf.space();

  const bool closed = use_closed_form(cfg);
  const auto report = closed ? entropic_eu_closed_form(m.a0(), cfg.sdf.model, u, x, gamma, space, cfg.solver)
                             : mu_search(m, space, u, x, gamma, cfg.solver);
  std::vector<double> baseline(space.size());
  if (closed) {
    const auto un = lognormal_unconstrained_eu(m, cfg.sdf.model, u, x);
    for (std::size_t i = 0; i < space.size(); ++i) baseline[i] = un.payoff(space.sdf(i));
  } else {
    const auto un = unconstrained_eu(m, u, space, x);
    baseline.assign(un.payoff.values().begin(), un.payoff.values().end());
  }

  nlohmann::json doc;
  doc["method"] = closed ? "closed_form" : "iterative";
  doc["regime"] = to_string(report.regime);
  doc["budget"] = json_number(x);
  doc["gamma"] = json_number(gamma);
  doc["states"] = space.size();
  doc["gamma1"] = json_number(report.gamma1);
  doc["gamma2"] = json_number(report.gamma2);
  doc["lambda_star"] = json_number(report.lambda_star);
  doc["mu_star"] = json_number(report.mu_star);
  doc["eu_value"] = json_number(report.eu_value);
  doc["risk_value"] = json_number(report.risk_value);
  doc["budget_residual"] = json_number(report.budget_residual);
  doc["risk_residual"] = json_number(report.risk_residual);
  doc["kkt_residual"] = json_number(report.kkt_residual);
  doc["iterations"] = report.iterations;

  log << "gamma1 = " << format_number(report.gamma1) << ", gamma2 = " << format_number(report.gamma2) << "\n";
  log << "regime = " << to_string(report.regime) << ", lambda* = " << format_number(report.lambda_star)
      << ", mu* = " << format_number(report.mu_star) << "\n";
  if (out.json()) out.write_json("eu_max", doc, log);
  if (out.csv()) {
    Table table{{"rho", "x_star", "x_star_unconstrained"}, {}};
    for (std::size_t i = 0; i < space.size(); ++i) table.rows.push_back({space.sdf(i), report.payoff[i], baseline[i]});
    out.write_csv("eu_max", std::move(table), log);
  }
  return ok;
}

inline std::vector<double> default_budgets() {
  std::vector<double> out;
  for (int k = 1; k <= 8; ++k) out.push_back(0.25 * k);
  return out;
}

inline int run_frontier(const RunConfig& cfg, Which which, const Artifacts& out, std::ostream& log) {
  need_measure(cfg);
  if (which != Which::gamma1) need_utility(cfg);
  const auto budgets = cfg.frontier_budgets.empty() ? default_budgets() : cfg.frontier_budgets;
  const auto space = cfg.sdf.space();

  Table table;
  table.header.push_back("x");
  if (which != Which::gamma2) table.header.push_back("gamma1");
  if (which != Which::gamma1) table.header.push_back("gamma2");
  nlohmann::json rows = nlohmann::json::array();
  for (double x : budgets) {
    std::vector<double> row{x};
    nlohmann::json entry;
    entry["x"] = json_number(x);
    if (which != Which::gamma2) {
      row.push_back(gamma1_at(cfg, space, x));
      entry["gamma1"] = json_number(row.back());
    }
    if (which != Which::gamma1) {
      row.push_back(gamma2_at(cfg, space, x));
      entry["gamma2"] = json_number(row.back());
    }
    table.rows.push_back(std::move(row));
    rows.push_back(std::move(entry));
  }
  log << "frontier: " << budgets.size() << " budgets\n";
  if (out.json()) out.write_json("frontier", nlohmann::json{{"states", space.size()}, {"rows", rows}}, log);
  if (out.csv()) out.write_csv("frontier", std::move(table), log);
  return ok;
}

inline int run_validate(std::uint64_t seed, const Artifacts& out, std::ostream& log) {
  const auto report = validate::run_validation(seed);
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"worst", json_number(c.worst)},
                      {"threshold", json_number(c.threshold)},
                      {"cases", c.cases},
                      {"detail", c.detail}});
    log << (c.passed ? "PASS " : "FAIL ") << c.name << " worst=" << format_number(c.worst)
        << " threshold=" << format_number(c.threshold) << "\n";
  }
  out.write_json("validate", {{"seed", seed}, {"passed", report.passed()}, {"checks", checks}}, log);
  return report.passed() ? ok : validation_failed;
}

}  // namespace detail

/// Runs one subcommand and maps library errors to exit codes. Diagnostics go to `err`.
inline int run(const RunOptions& opt, const RunConfig& cfg, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
  try {
    const auto out = detail::artifacts(cfg, opt);
    switch (opt.command) {
      case Command::risk_min: return detail::run_risk_min(cfg, out, log);
      case Command::eu_max: return detail::run_eu_max(cfg, out, log);
      case Command::frontier: return detail::run_frontier(cfg, opt.which, out, log);
      case Command::validate: return detail::run_validate(opt.seed, out, log);
    }
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    err << "gamma1 = " << format_number(e.gamma1()) << ", gamma2 = " << format_number(e.gamma2()) << "\n";
    return infeasible;
  } catch (const NoConvergenceError& e) {
    err << "no convergence: " << e.what() << "\n";
    return no_convergence;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  }
  return config_error;
}

}  // namespace werm::cli
