#pragma once

// Subcommand bodies behind the qdkmc executable. Each writes its CSV outputs
// and a `<command>.manifest.json` into config.output_dir.

#include "qdkmc/config.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace qdkmc {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitFitRefused = 3,
  kExitValidation = 4,
};

struct CommandOptions {
  unsigned workers = 1;
  bool resume = false;
  bool progress = true;
};

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
};

int cmd_decay(const RunConfig& config, const CommandOptions& options, CommandIo io);
int cmd_g2(const RunConfig& config, const CommandOptions& options, CommandIo io);
int cmd_blink(const RunConfig& config, const CommandOptions& options, CommandIo io);
int cmd_sweep(const RunConfig& config, const CommandOptions& options, CommandIo io);
int cmd_saturation(const RunConfig& config, const CommandOptions& options, CommandIo io);
int cmd_validate(const RunConfig& config, const CommandOptions& options, CommandIo io);

/// Writes `<command>.manifest.json`: config echo, seed, version, output files.
void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& outputs);

}  // namespace qdkmc
