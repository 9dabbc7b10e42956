#pragma once

#include <iosfwd>

namespace miirl {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNotConverged = 3 };

/// Entry point of the `miirl` tool. Machine output goes to `out` or to files; logs go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace miirl
