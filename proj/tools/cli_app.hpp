#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scum::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitProcessing = 1;
inline constexpr int kExitConfig = 2;

/// Runs the scumwatch command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scum::cli
