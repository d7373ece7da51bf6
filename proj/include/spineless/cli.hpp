#pragma once

// The `spineless` command line: check, gen-trace, run, compare and bench.

#include <iosfwd>
#include <string>
#include <vector>

namespace spineless {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2 };

/// Runs one command line (args[0] is the program name) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spineless
