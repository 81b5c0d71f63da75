#pragma once

#include <ostream>

#include "run_config.hpp"

namespace plapflow::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kIncomplete = 1,    // a level, p value or check did not succeed; the run continued
    kSolverFailure = 2, // time step underflow or another hard solver failure
    kInvalidInput = 3,  // bad configuration or incompatible data
};

/// Each command writes its artifacts and manifest.json under config.output_dir and
/// prints a short summary to `log`.
int cmd_network_formation(const RunConfig& config, std::ostream& log);
int cmd_plap(const RunConfig& config, std::ostream& log);
int cmd_convergence(const RunConfig& config, std::ostream& log);
int cmd_tc6(const RunConfig& config, std::ostream& log);
int cmd_discrete(const RunConfig& config, std::ostream& log);

/// Dispatches on config.scenario and maps library exceptions to exit codes.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace plapflow::cli
