#ifndef TNT_CLI_COMMANDS_HPP
#define TNT_CLI_COMMANDS_HPP

// The tntsim subcommands. run_cli is the whole program minus main(), so the
// tests can drive it in-process.

#include "tnt/cli/config.hpp"
#include "tnt/cli/output.hpp"

#include <iosfwd>

namespace tnt::cli {

enum ExitCode : int { kSuccess = 0, kComputationFailure = 1, kConfigError = 2 };

/// Writes the preset's panels into `out` and returns per-file metadata for
/// the manifest.
nlohmann::json cmd_fig(const RunConfig& cfg, OutputSet& out);

/// Single-protocol evaluation: run_summary.json, run_probs and optionally
/// run_q.
nlohmann::json cmd_run(const RunConfig& cfg, OutputSet& out);

/// Prints one line per parity condition; true iff all three hold.
bool cmd_certify(const RunConfig& cfg, std::ostream& report);

nlohmann::json manifest(const std::string& command, const RunConfig& cfg,
                        const OutputSet& out, const nlohmann::json& panels);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tnt::cli

#endif  // TNT_CLI_COMMANDS_HPP
