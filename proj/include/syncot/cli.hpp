#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace syncot {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIters = 2;
inline constexpr int kExitUsage = 64;

// Entry point behind the syncot binary. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace syncot
