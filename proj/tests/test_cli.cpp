#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "werm/cli/config.hpp"
#include "werm/cli/run.hpp"

using namespace werm;
using namespace werm::cli;
namespace fs = std::filesystem;

namespace {

const std::string source_dir = WERM_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("werm_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

int shell(const std::string& command) {
  const int status = std::system((command + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* small_werm = R"({
  "sdf": {"kind": "lognormal", "b": -0.5, "sigma": 1.0, "states": 400},
  "measure": {"kind": "uniform_grid", "a0": 2.0, "a1": 3.0, "count": 11},
  "utility": {"kind": "log"},
  "problem": {"budget": 1.0, "gamma": -1.10},
  "output": {"prefix": "small"}
})";

}  // namespace

TEST(Config, ParsesFigureConfig) {
  const auto cfg = load_config(source_dir + "/figures/entropic.cfg");
  EXPECT_TRUE(cfg.sdf.lognormal);
  EXPECT_EQ(cfg.sdf.states, 10000u);
  ASSERT_TRUE(cfg.measure);
  EXPECT_EQ(cfg.measure->size(), 1u);
  ASSERT_TRUE(cfg.gamma);
  EXPECT_DOUBLE_EQ(*cfg.gamma, -1.12);
  EXPECT_EQ(cfg.frontier_budgets.size(), 8u);
  EXPECT_DOUBLE_EQ(cfg.frontier_budgets.back(), 2.0);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sdf": {"kind": "gamma"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sdf": {"b": 0, "sigma": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sdf": {"b": 0, "sigma": 1, "states": 2.5}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"measure": {"atoms": [{"a": 1, "weight": 0.5}]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"utility": {"kind": "exp"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": {"budget": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver": {"method": "magic"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver": {"tol_payoff": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"output": {"format": "xml"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"frontier": {"from": 2, "to": 1, "step": 0.5}})"), ConfigError);
}

TEST(Config, DiscreteSdfSorted) {
  const auto cfg = parse_config(
      R"({"sdf": {"kind": "discrete", "states": [{"probability": 0.5, "sdf": 2}, {"probability": 0.5, "sdf": 0.5}]}})");
  const auto s = cfg.sdf.space();
  EXPECT_DOUBLE_EQ(s.sdf(0), 0.5);
}

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(-1.2488898865312), "-1.24888988653");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(json_number(std::numeric_limits<double>::infinity()), "inf");
}

// [PAPER] entropic example: gamma1(1) = -1.2489, gamma2(1) = -1.0386.
TEST(Run, EntropicFigureReport) {
  const auto dir = scratch("entropic");
  auto cfg = load_config(source_dir + "/figures/entropic.cfg");
  RunOptions opt;
  opt.out_dir = dir.string();
  std::ostringstream log, err;
  ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
  const auto doc = nlohmann::json::parse(slurp(dir / "entropic_risk_min.json"));
  EXPECT_NEAR(doc["gamma1"].get<double>(), -1.2489, 1e-3);
  EXPECT_NEAR(doc["gamma2"].get<double>(), -1.0386, 1e-3);
  EXPECT_EQ(doc["method"], "closed_form");

  std::string header;
  const auto rows = read_csv(dir / "entropic_risk_min.csv", &header);
  EXPECT_EQ(header, "rho,x_star");
  ASSERT_EQ(rows.size(), 10000u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i - 1][0], rows[i][0]);

  opt.command = Command::eu_max;
  ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
  const auto eu = nlohmann::json::parse(slurp(dir / "entropic_eu_max.json"));
  EXPECT_EQ(eu["regime"], "interior");
  EXPECT_NEAR(eu["risk_value"].get<double>(), -1.12, 1e-8);
  EXPECT_LE(eu["kkt_residual"].get<double>(), 1e-8);
  EXPECT_EQ(read_csv(dir / "entropic_eu_max.csv", &header).front().size(), 3u);
  EXPECT_EQ(header, "rho,x_star,x_star_unconstrained");
}

TEST(Run, ByteIdenticalOutput) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const auto cfg = parse_config(small_werm);
  RunOptions opt;
  opt.command = Command::eu_max;
  std::ostringstream log, err;
  opt.out_dir = a.string();
  ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
  opt.out_dir = b.string();
  ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
  EXPECT_EQ(slurp(a / "small_eu_max.json"), slurp(b / "small_eu_max.json"));
  EXPECT_EQ(slurp(a / "small_eu_max.csv"), slurp(b / "small_eu_max.csv"));
}

// [DERIVED] frontier columns decrease in x, and gamma1 < gamma2 pointwise
// because the risk minimizer is feasible for the unconstrained problem.
TEST(Run, FrontierOrdering) {
  for (const std::string which : {"entropic", "small"}) {
    const auto dir = scratch("frontier_" + which);
    const auto cfg = which == "entropic" ? load_config(source_dir + "/figures/entropic.cfg") : parse_config(small_werm);
    RunOptions opt;
    opt.command = Command::frontier;
    opt.out_dir = dir.string();
    opt.format = Format::csv;
    std::ostringstream log, err;
    ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
    std::string header;
    const auto rows = read_csv(dir / (cfg.prefix + "_frontier.csv"), &header);
    EXPECT_EQ(header, "x,gamma1,gamma2");
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_DOUBLE_EQ(rows.front()[0], 0.25);
    EXPECT_DOUBLE_EQ(rows.back()[0], 2.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_LT(rows[i][1], rows[i][2]) << which;
      if (i > 0) {
        EXPECT_LT(rows[i][1], rows[i - 1][1]) << which;
        EXPECT_LT(rows[i][2], rows[i - 1][2]) << which;
      }
    }
    EXPECT_FALSE(fs::exists(dir / (cfg.prefix + "_frontier.json")));
  }
}

TEST(Run, WhichSelectsColumns) {
  const auto dir = scratch("which");
  auto cfg = parse_config(R"({"measure": {"atoms": [{"a": 2, "weight": 1}]}, "output": {"prefix": "g1"}})");
  RunOptions opt;
  opt.command = Command::frontier;
  opt.which = Which::gamma1;
  opt.out_dir = dir.string();
  std::ostringstream log, err;
  ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
  std::string header;
  read_csv(dir / "g1_frontier.csv", &header);
  EXPECT_EQ(header, "x,gamma1");
  opt.which = Which::gamma2;  // no utility section
  EXPECT_EQ(run(opt, cfg, log, err), config_error);
}

TEST(Run, ExitCodes) {
  const auto dir = scratch("codes");
  auto cfg = parse_config(small_werm);
  RunOptions opt;
  opt.out_dir = dir.string();
  opt.command = Command::eu_max;
  std::ostringstream log, err;
  cfg.gamma = -5.0;
  EXPECT_EQ(run(opt, cfg, log, err), infeasible);
  EXPECT_NE(err.str().find("gamma1 = "), std::string::npos);
  EXPECT_NE(err.str().find("gamma2 = "), std::string::npos);

  cfg.gamma.reset();
  EXPECT_EQ(run(opt, cfg, log, err), config_error);

  cfg = parse_config(small_werm);
  cfg.solver.fixed_point.max_iter = 1;
  cfg.solver.max_evaluations = 2;
  opt.command = Command::risk_min;
  EXPECT_EQ(run(opt, cfg, log, err), no_convergence);

  cfg = parse_config(small_werm);
  cfg.method = Method::closed_form;  // 11 atoms: no closed form
  EXPECT_EQ(run(opt, cfg, log, err), config_error);
}

// [PAPER] WERM example at 1e5 states: gamma1(1) = -1.2005, gamma2(1) = -0.9489.
TEST(Run, WermFigureReport) {
  const auto dir = scratch("werm");
  const auto cfg = load_config(source_dir + "/figures/werm.cfg");
  RunOptions opt;
  opt.out_dir = dir.string();
  opt.format = Format::json;
  std::ostringstream log, err;
  ASSERT_EQ(run(opt, cfg, log, err), ok) << err.str();
  const auto doc = nlohmann::json::parse(slurp(dir / "werm_risk_min.json"));
  EXPECT_EQ(doc["states"], 100000);
  EXPECT_NEAR(doc["gamma1"].get<double>(), -1.2005, 2e-3);
  EXPECT_NEAR(doc["gamma2"].get<double>(), -0.9489, 2e-3);
  EXPECT_LE(doc["kkt_residual"].get<double>(), 1e-8);
}

TEST(Binary, ExitStatuses) {
  const std::string bin = WERM_CLI;
  const auto dir = scratch("binary");
  const std::string cfg = source_dir + "/figures/entropic.cfg";
  EXPECT_EQ(shell(bin + " risk-min --config " + cfg + " --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "entropic_risk_min.json"));
  EXPECT_TRUE(fs::exists(dir / "entropic_risk_min.csv"));
  EXPECT_EQ(shell(bin + " risk-min --config " + cfg + " --out " + dir.string() + " --format bogus"), 1);
  EXPECT_EQ(shell(bin + " risk-min --config /nonexistent.cfg"), 1);
  EXPECT_EQ(shell(bin + " risk-min"), 1);
  EXPECT_EQ(shell(bin + " frontier --which gamma3 --config " + cfg), 1);

  std::ofstream(dir / "infeasible.cfg") << R"({"measure": {"atoms": [{"a": 2, "weight": 1}]}, "utility": {"kind": "log"},
    "problem": {"budget": 1, "gamma": -3}})";
  EXPECT_EQ(shell(bin + " eu-max --config " + (dir / "infeasible.cfg").string() + " --out " + dir.string()), 2);
}

TEST(Binary, ValidateWritesReport) {
  const auto dir = scratch("validate");
  EXPECT_EQ(shell(std::string(WERM_CLI) + " validate --seed 7 --out " + dir.string()), 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "werm_validate.json"));
  EXPECT_TRUE(doc["passed"].get<bool>());
  EXPECT_EQ(doc["seed"], 7);
  EXPECT_GE(doc["checks"].size(), 15u);
}
