#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sinkdist::cli {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitParse = 2,
  kExitNumerical = 3,
  kExitOraclePreconditions = 4,
  kExitTrainingFailure = 5,
};

// Runs the command line `args` (without the program name). Results go to
// `out` (or the --out file), diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sinkdist::cli
