#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "antibunch.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "Output directory (overrides [output] directory)");
  cmd->add_option("--seed", flags.seed, "Monte Carlo seed (overrides [montecarlo] seed)");
  cmd->add_option("--threads", flags.threads, "Worker threads (overrides [output] threads)")
      ->check(CLI::Range(1u, 1024u));
}

antibunch::RawConfig load(const CommonFlags& flags) {
  auto raw = antibunch::load_raw_config(flags.config);
  if (flags.out) antibunch::set_override(raw, "output.directory", *flags.out);
  if (flags.seed) antibunch::set_override(raw, "montecarlo.seed", std::to_string(*flags.seed));
  if (flags.threads) antibunch::set_override(raw, "output.threads", std::to_string(*flags.threads));
  return raw;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial antibunching simulator for SPDC photon pairs behind a birefringent double slit"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* fringe = app.add_subcommand("fringe", "Coincidence grid and fixed x1+x2 fringe slices");
  auto* witness = app.add_subcommand("witness", "Spatial Schwarz-inequality test (exit 10 violated, 11 not)");
  auto* montecarlo = app.add_subcommand("montecarlo", "Sample coincidence events and histogram x1-x2");
  auto* sweep = app.add_subcommand("sweep", "Repeat fringe and witness over values of one config key");
  for (auto* cmd : {fringe, witness, montecarlo, sweep}) add_common(cmd, flags);

  std::string sweep_key;
  std::vector<std::string> sweep_values;
  sweep->add_option("--param", sweep_key, "Config key as section.key, e.g. setup.pump_waist")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values with units, e.g. \"10 um,20 um\"")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : antibunch::exit_error;
  }

  try {
    const auto raw = load(flags);
    if (sweep->parsed()) {
      const auto base = antibunch::parse_run_config(raw);
      return antibunch::cmd_sweep(raw, sweep_key, sweep_values, base.output_dir);
    }
    const auto config = antibunch::parse_run_config(raw);
    if (fringe->parsed()) return antibunch::cmd_fringe(config);
    if (witness->parsed()) {
      const int status = antibunch::cmd_witness(config);
      std::cout << (status == antibunch::exit_violated ? "violated" : "not violated") << '\n';
      return status;
    }
    return antibunch::cmd_montecarlo(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return antibunch::exit_error;
  }
}
