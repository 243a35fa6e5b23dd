#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zenosos::cli {

/// Exit codes shared by every subcommand.
enum Exit : int { kOk = 0, kUsage = 1, kNegative = 2, kInconclusive = 3 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zenosos::cli
