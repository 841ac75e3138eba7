#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qlab::cli {

// Exit codes of every subcommand.
enum Exit : int { kHolds = 0, kFails = 1, kInconclusive = 2, kComputeFailure = 3, kConfigError = 4 };

// Runs one command line (args excludes the program name). The one-line verdict and tables go to `out`,
// diagnostics to `err`; CSV files go where --out points.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Same, from main().
int run(int argc, const char* const* argv);

}  // namespace qlab::cli
