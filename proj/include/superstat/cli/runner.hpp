#pragma once

#include "superstat/cli/config.hpp"
#include "superstat/cli/table.hpp"

namespace superstat::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNotConverged = 2, kIoError = 3 };

struct RunOutput {
    SweepTable table;
    bool all_converged = true;
};

RunOutput run(const RunConfig& cfg);

/// Runs and writes cfg.out (if set); returns the process exit code.
int run_and_write(const RunConfig& cfg);

} // namespace superstat::cli
