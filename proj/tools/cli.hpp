#pragma once

#include <ostream>

namespace cwadam::cli {

enum ExitCode : int {
  kOk = 0,
  kViolation = 1,
  kConfigError = 2,
  kDivergence = 3,
};

// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cwadam::cli
