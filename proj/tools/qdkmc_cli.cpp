// qdkmc: quantum-dot carrier kinetics by kinetic Monte Carlo.

#include "qdkmc/commands.hpp"
#include "qdkmc/config.hpp"
#include "qdkmc/version.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
  using namespace qdkmc;

  CLI::App app{"Quantum-dot carrier kinetics: kinetic Monte Carlo experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> cycles;
  unsigned workers = 1;
  bool quiet = false;
  app.add_option("--config", configs, "Config file(s), applied in order")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base seed (overrides [run] seed)");
  app.add_option("--out", out, "Output directory (overrides [run] output_dir)");
  app.add_option("--workers", workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--cycles", cycles,
                 "Excitation cycles (overrides [schedule] n_cycles and [grid] cycles_per_point)");
  app.add_flag("--quiet", quiet, "No progress lines");

  auto* decay = app.add_subcommand("decay", "Decay histogram of exciton photons, with fits");
  auto* g2 = app.add_subcommand("g2", "Two-detector coincidence histogram");
  auto* blink = app.add_subcommand("blink", "Dark-run histogram, with fits");
  auto* sweep = app.add_subcommand("sweep", "Parameter grid of per-class emission probability");
  auto* saturation = app.add_subcommand("saturation", "Exciton and biexciton yield vs p_in");
  auto* validate = app.add_subcommand("validate", "Compare against exact and analytic references");

  std::vector<std::string> grids;
  bool resume = false;
  sweep->add_option("--grid", grids, "Grid file(s) with a [grid] section")->check(CLI::ExistingFile);
  sweep->add_flag("--resume", resume, "Continue an interrupted sweep.csv in the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::filesystem::path> files(configs.begin(), configs.end());
    files.insert(files.end(), grids.begin(), grids.end());
    RunConfig config = load_config(files);
    if (seed) {
      config.seed = *seed;
      config.grid_seed_base = *seed;
    }
    if (out)
      config.output_dir = *out;
    if (cycles) {
      config.n_cycles = *cycles;
      config.grid_cycles = *cycles;
    }
    config.validate();

    CommandOptions options;
    options.workers = workers;
    options.resume = resume;
    options.progress = !quiet;
    CommandIo io{std::cout, std::cerr};

    if (*decay)
      return cmd_decay(config, options, io);
    if (*g2)
      return cmd_g2(config, options, io);
    if (*blink)
      return cmd_blink(config, options, io);
    if (*sweep)
      return cmd_sweep(config, options, io);
    if (*saturation)
      return cmd_saturation(config, options, io);
    if (*validate)
      return cmd_validate(config, options, io);
  } catch (const ConfigError& e) {
    std::cerr << "qdkmc: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "qdkmc: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
