#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "clusterboot/error.hpp"

namespace cboot::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kMalformed = 2,
  kDegenerate = 3,
  kInsufficientReplicates = 4,
  kZeroGamma = 5,
  kUnsupportedInference = 6,
};

int exit_code_for(Errc code) noexcept;

/// Runs one command line. Reports go to --output (or `out`), diagnostics and
/// JSON error objects to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cboot::cli
