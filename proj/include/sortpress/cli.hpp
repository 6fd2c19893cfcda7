#pragma once

#include <iosfwd>

namespace sortpress {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitUsage = 64;

/// Entry point of the `sortpress` command line tool.
/// Subcommands: simulate, train, evaluate, benchmark, trace-replay, observation-spec.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sortpress
