#pragma once

// Batch front end: vklab <command> --config <path> [--out <dir>] [--threads <k>] [--seed <u64>]

#include <iosfwd>
#include <string>

namespace vklab {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_invalid = 2, exit_numerical = 3 };

/// Parses argv, runs the command and writes its artifacts plus manifest.json into
/// the output directory. Returns 0, 2 (invalid config or input) or 3 (numerical failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vklab
