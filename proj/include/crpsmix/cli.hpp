#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crpsmix {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
    kExitIo = 3,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "CRPSMIX_OUT_DIR";

/// Runs the command line (without the program name). Subcommands: synth,
/// load, verify, sweep.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crpsmix
