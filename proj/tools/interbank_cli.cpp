#include <iostream>
#include <utility>

#include "CLI11.hpp"
#include "interbank/cli.hpp"

int main(int argc, char** argv) {
  namespace ic = interbank::cli;

  CLI::App app{"Interbank lending game: Riccati solver, simulator and checks"};
  app.set_version_flag("--version", std::string(ic::version()));
  app.require_subcommand(1);

  std::string config_path;
  ic::Overrides overrides;
  bool quiet = false;

  const std::pair<const char*, const char*> commands[] = {
      {"solve", "Integrate the Riccati systems and write coefficient tables"},
      {"simulate", "Simulate bank reserves under the chosen strategy"},
      {"sweep", "Liquidity rate at t = 0 across a parameter sweep"},
      {"check", "Run the structural and numerical checks"},
      {"prob", "Systemic default probability, analytic and Monte Carlo"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", overrides.output_dir, "Output directory");
    sub->add_option("--seed", overrides.seed, "Random seed");
    sub->add_option("--steps", overrides.steps, "Time steps")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
    sub->add_option("--paths", overrides.paths, "Monte Carlo paths");
    sub->add_option("--threads", overrides.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--raw", overrides.raw, "Dump raw bank states (simulate)");
    sub->add_flag("--quiet", quiet, "Suppress progress and warnings");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ic::exit_rejected;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  ic::RunConfig config;
  try {
    config = ic::load_config(config_path);
  } catch (const ic::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ic::exit_rejected;
  }
  ic::apply_overrides(config, overrides);
  return ic::run_command(command, config, quiet, std::cout, std::cerr);
}
