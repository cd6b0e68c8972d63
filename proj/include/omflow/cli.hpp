#pragma once

#include <exception>
#include <string>
#include <vector>

namespace omflow::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kDomain = 3,
  kNoConvergence = 4,
  kDegenerate = 5,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Entry point of the omflow executable. Diagnostics go to stderr, the
/// headline result of each command to stdout.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace omflow::cli
