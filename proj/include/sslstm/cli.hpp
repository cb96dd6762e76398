#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sslstm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

/// Runs one invocation. `args` excludes the program name. Reports go to
/// `out` unless `--output` is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace sslstm::cli
