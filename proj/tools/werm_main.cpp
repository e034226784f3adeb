#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "werm/cli/run.hpp"

int main(int argc, char** argv) {
  using namespace werm::cli;

  CLI::App app{"Payoff optimization under weighted entropic risk measures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format;
  std::string which = "both";
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--format", format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  };

  auto* risk_min = app.add_subcommand("risk-min", "minimize the risk of a budget-feasible payoff");
  add_common(risk_min, true);
  auto* eu_max = app.add_subcommand("eu-max", "maximize expected utility under a risk cap");
  add_common(eu_max, true);
  auto* frontier = app.add_subcommand("frontier", "sweep gamma1(x) and gamma2(x) over budgets");
  add_common(frontier, true);
  frontier->add_option("--which", which, "gamma1, gamma2 or both")
      ->check(CLI::IsMember({"gamma1", "gamma2", "both"}));
  auto* validate = app.add_subcommand("validate", "run the invariant, oracle and iteration suites");
  add_common(validate, false);
  validate->add_option("--seed", seed, "seed for the randomized suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(config_error);
  }

  RunOptions opt;
  if (*risk_min) opt.command = Command::risk_min;
  if (*eu_max) opt.command = Command::eu_max;
  if (*frontier) opt.command = Command::frontier;
  if (*validate) opt.command = Command::validate;
  opt.which = which == "gamma1" ? Which::gamma1 : which == "gamma2" ? Which::gamma2 : Which::both;
  opt.seed = seed;
  if (!out_dir.empty()) opt.out_dir = out_dir;
  if (!format.empty()) opt.format = parse_format(format);

  RunConfig cfg;
  if (!config_path.empty()) {
    try {
      cfg = load_config(config_path);
    } catch (const werm::Error& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return config_error;
    }
  }
  return run(opt, cfg);
}
