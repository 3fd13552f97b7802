#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pso_escape::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kThreshold = 2,
  kIo = 3,
};

/// Entry point behind the pso-escape binary. `args` excludes the program name.
/// Result files go to --out (or the config's "out"), otherwise to `out`;
/// summaries and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pso_escape::cli
