#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tasil::cli {

enum ExitStatus : int { kOk = 0, kUsageError = 1, kDataError = 2 };

// Runs one command line (args excludes the program name). Normal output goes
// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace tasil::cli
