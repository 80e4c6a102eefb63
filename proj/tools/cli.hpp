#pragma once

#include <string>
#include <vector>

namespace bsann::cli {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace bsann::cli
