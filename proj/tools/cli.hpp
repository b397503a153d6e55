#pragma once

#include <iosfwd>

namespace nudge::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,
  kUsageError = 2,
};

/// Runs the nudgebandit command line; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nudge::cli
