#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repeaterlab {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Runs one command line (program name excluded). REPEATERLAB_SEED, when set,
/// replaces the configured base seed; an explicit --seed wins over both.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repeaterlab
