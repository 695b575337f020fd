#pragma once

// Run configuration: INI-style sections with unit-suffixed keys, optional
// environment overrides (QDKMC_<SECTION>_<KEY>), then command-line flags.

#include "qdkmc/excitation.hpp"
#include "qdkmc/kinetics.hpp"
#include "qdkmc/observables.hpp"
#include "qdkmc/sweep.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdkmc {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  RateParams rates;
  double period_ns = 10.0;
  std::uint64_t n_cycles = 1'000'000;
  bool resonant = false;
  double p_in = 1.5;
  Polarization polarization = Polarization::UpDn;
  int n_levels = 2;
  ObservableSettings observables;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = ".";

  // [grid]: sweep axes and per-point budget. An unset axis holds the single
  // value from [rates] / [schedule].
  struct OptionalAxes {
    std::optional<std::vector<double>> gamma_nr, gamma_sf, purcell, period_t, p_in;
  } grid_axes;
  std::uint64_t grid_cycles = 1'000'000;
  std::uint64_t grid_burn_in = 1000;
  std::optional<std::uint64_t> grid_seed_base;  // defaults to seed

  // [saturation]
  std::vector<double> saturation_p_in = logspace(0.01, 10.0, 13);

  void validate() const;
  Scheme scheme() const;
  PulseSchedule schedule() const;
  /// Observable settings with the period filled in from the schedule.
  ObservableSettings observable_settings() const;
  GridSpec grid() const;

  /// Effective values, section -> key -> text, as they would be written back.
  std::map<std::string, std::map<std::string, std::string>> echo() const;
};

/// Source of environment values; defaults to std::getenv.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Reads `files` in order over the defaults, then applies environment
/// overrides. Errors name the file, line, section, and key.
RunConfig load_config(const std::vector<std::filesystem::path>& files,
                      const EnvLookup& env = process_env());

/// Name of the environment variable that overrides `section.key`.
std::string env_name(const std::string& section, const std::string& key);

}  // namespace qdkmc
