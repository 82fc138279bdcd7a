#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace patchy {

// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNonConvergence = 2;
inline constexpr int kExitIo = 3;

/// Entry point behind the `patchy` executable. `args` excludes the program
/// name. Subcommands: solve, regime, decompose, bench.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace patchy
