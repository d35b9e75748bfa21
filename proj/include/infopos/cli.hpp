#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace infopos::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line (args[0] is the program name). Log lines are
// key=value events on `out`; usage and error text goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace infopos::cli
