#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dsner::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kArtifactMismatch = 3,
  kDivergence = 4,
};

// Entry point shared by the dsner binary and the tests. args excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsner::cli
