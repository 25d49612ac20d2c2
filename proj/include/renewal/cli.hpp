#pragma once

#include <string>
#include <vector>

namespace renewal {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitUsage = 64;

// Subcommands bound, optimize, simulate, verify and report. args excludes the program name.
int run_command(const std::vector<std::string>& args);
int run_command(int argc, char** argv);

}  // namespace renewal
