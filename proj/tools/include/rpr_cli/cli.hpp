#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rpr::cli {

// Exit codes are a scripting contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;  // bad flags, invalid config, unreadable or malformed data
inline constexpr int kExitNumeric = 3;

/// Name of the environment variable holding the default config file path.
inline constexpr const char* kConfigEnv = "RPR_CONFIG";

/// Runs one subcommand. args excludes the program name. Structured reports go
/// to out as one JSON object per line; diagnostics go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpr::cli
