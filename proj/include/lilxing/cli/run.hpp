#pragma once

#include <iosfwd>

#include "lilxing/cli/config.hpp"

namespace lilxing::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kConvergenceError = 2 };

/// Parses the command line (subcommand, flags, --config file, the
/// LILXING_WORKERS environment default) and runs the experiment. Diagnostics
/// go to err as a single line; CSV goes to the --out file or to out.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs an already assembled configuration. Throws ConfigError and the
/// library's exceptions; run_main maps them to exit codes.
void run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace lilxing::cli
