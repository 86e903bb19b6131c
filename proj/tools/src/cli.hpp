#pragma once

#include <iosfwd>

namespace graft::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;   // bad flags or config
inline constexpr int kExitRuntime = 2;  // missing artifacts, I/O, endpoint failures

/// Parses argv, runs the chosen subcommand and maps failures to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace graft::cli
