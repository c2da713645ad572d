#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// Runs one command line (without the program name). Results go to `out`
/// or to the --output file; diagnostics go to `err`, errors as a single
/// line "ERROR:<exit code>: message". Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvb::cli
