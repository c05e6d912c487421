#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"

namespace lifshitz::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,  // assumption or inequality failure
  kExitInput = 2,
  kExitNoConvergence = 3,
  kExitInsufficientData = 4,
  kExitInfeasible = 5,
};

struct OutputFile {
  std::string name;
  std::string content;
};

/// Everything a command produces. Files are the primary, byte-deterministic
/// outputs; `summary` goes to stdout.
struct CommandResult {
  int exit_code = kExitOk;
  std::vector<OutputFile> files;
  std::string summary;

  const OutputFile* file(const std::string& name) const;
};

/// Model after standardization and energy normalization, with its ground state.
struct PreparedModel {
  ModelSpec model;
  GroundStateData gs;
  double raw_ground_energy = 0.0;
};

PreparedModel prepare_model(const ModelSpec& model, int n, const SolverOptions& opts = {});

CommandResult run_validate(const RunConfig& cfg);
CommandResult run_spectrum(const RunConfig& cfg, unsigned workers);
CommandResult run_ids(const RunConfig& cfg, unsigned workers);
CommandResult run_lifshitz(const RunConfig& cfg, unsigned workers);
CommandResult run_bounds(const RunConfig& cfg, unsigned workers);

/// Dispatch by name; throws ConfigError for an unknown command.
CommandResult run_command(const std::string& command, const RunConfig& cfg, unsigned workers);

/// Extra bytes that determine a command's output beyond the config (the
/// replayed curve for lifshitz); folded into the cache key.
std::string external_inputs(const std::string& command, const RunConfig& cfg);

}  // namespace lifshitz::cli
