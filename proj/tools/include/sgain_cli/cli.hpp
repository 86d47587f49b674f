#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgain::cli {

/// Stable exit codes of the sgain tool.
enum ExitCode : int {
  kOk = 0,
  kError = 1,
  kNotCertified = 2,
  kNotConverged = 3,
  kRefused = 4,
};

/// Runs the tool on argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sgain::cli
