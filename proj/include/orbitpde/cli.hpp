#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "orbitpde/config.hpp"

namespace orbitpde {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitGate = 3,
  kExitNoConvergence = 4,
  kExitVerification = 5,
  kExitBarrier = 6,
};

struct CommandOptions {
  bool override_gate = false;
  int refine = 1;  // grid-doubling levels
  std::optional<std::filesystem::path> output_dir;
};

/// The subcommands. Each writes its artifacts next to `config.output(...)`
/// and a human-readable summary to `log`, and returns an ExitCode.
int run_classify(const ProblemConfig& config, const CommandOptions& opts, std::ostream& log);
int run_solve(const ProblemConfig& config, const CommandOptions& opts, std::ostream& log);
int run_barrier(const ProblemConfig& config, const CommandOptions& opts, std::ostream& log);
int run_verify(const ProblemConfig& config, const CommandOptions& opts, std::ostream& log);
int run_convexity(const ProblemConfig& config, const CommandOptions& opts, std::ostream& log);

/// Loads `config_path` and runs `command`, mapping every failure to its
/// exit code.
int run_command(const std::string& command, const std::filesystem::path& config_path, const CommandOptions& opts,
                std::ostream& log);

int run_cli(int argc, char** argv);

}  // namespace orbitpde
