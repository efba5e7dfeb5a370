#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixent {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitNumeric = 3,
};

/// Runs one command. `args` excludes the program name. Results go to `out`,
/// diagnostics and warnings to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixent
