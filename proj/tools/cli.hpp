#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace umps::cli {

inline constexpr const char *kVersion = "1.0.0";

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`; failures print one line "error: <kind>: <message>" to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace umps::cli
