#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sivcpt::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kConfigError = 2, kNumericalError = 3 };

// Entry point of the command-line tool. args[0] is the program name.
// Errors are reported as one JSON object on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sivcpt::cli
