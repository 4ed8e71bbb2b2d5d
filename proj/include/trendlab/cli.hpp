#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trendlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. `args` excludes the program name. JSON summaries go
// to `out`, diagnostics and help text to `err`. Output files go to --out,
// else $TRENDLAB_OUT.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trendlab::cli
