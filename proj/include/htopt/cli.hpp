#pragma once

#include <iosfwd>

namespace htopt {

/// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitMaxIters = 2,     ///< solve hit max-iters; check commands found no match / a tolerance miss
  kExitDiverged = 3,     ///< solve diverged; check commands hit evaluation failures
};

/// Entry point of the htopt command line: solve, bench, check-convexity, grad-check.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace htopt
