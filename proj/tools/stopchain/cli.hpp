#pragma once

#include <ostream>

namespace stopchain::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalidInput = 1,
    kCheckFailed = 2,
    kNotConverged = 3,
};

/// Runs one command line. Reports go to the files named by the flags;
/// human-readable summaries to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stopchain::cli
