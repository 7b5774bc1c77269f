#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stochrate/experiment.hpp"

using namespace stochrate;

int main(int argc, char** argv) {
  CLI::App app{"stochrate: executable convergence-rate calculators with Monte Carlo certification"};
  app.require_subcommand(1);

  std::string config_path;
  CommandOptions opt;
  long long seed = -1;
  std::uint64_t count = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", config_path, "experiment config file");
    if (needs_config) c->required();
    cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--format", opt.format, "csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    cmd->add_option("--seed", seed, "override the master seed");
  };

  auto* catalog = app.add_subcommand("catalog", "list registered moduli, models and theorems");
  auto* rate = app.add_subcommand("rate", "evaluate the selected rate; no simulation");
  add_common(rate, true);
  auto* validate = app.add_subcommand("validate", "rate evaluation plus Monte Carlo checks");
  add_common(validate, true);
  auto* trajectory = app.add_subcommand("trajectory", "per-step functional values, plot-ready");
  add_common(trajectory, true);
  trajectory->add_option("--count", count, "number of trajectories")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (seed >= 0) opt.seed_override = static_cast<std::uint64_t>(seed);
  if (trajectory->count("--count") > 0) opt.trajectories = count;

  try {
    if (catalog->parsed()) return run_catalog(std::cout);
    const Config cfg = Config::load(config_path);
    if (rate->parsed()) return run_rate(cfg, opt, std::cout);
    if (validate->parsed()) return run_validate(cfg, opt, std::cout);
    if (trajectory->parsed()) return run_trajectory(cfg, opt, std::cout);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
