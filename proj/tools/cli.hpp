#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdde::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailure = 1,  // a verification failed or a numerical solve did not succeed
  kUsageError = 2,    // bad flags, unreadable input, malformed model definition
};

/// Runs the command line `args` (without the program name). Normal output goes
/// to `out`, diagnostics and usage synopses to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdde::cli
