#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace neuromap::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics and log lines to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace neuromap::cli
