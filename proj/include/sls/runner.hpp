#pragma once

#include <ostream>
#include <vector>

#include "sls/config.hpp"

namespace sls {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitSolverFailure = 3;

/// Runs the configured design and writes summary.txt, impulse_wy.csv,
/// step_wy.csv (and convergence.csv if a sweep is configured) into the
/// output directory. Progress goes to `log`. Returns an exit status.
int run(const RunConfig& config, std::ostream& log);

/// Convergence sweep over spiral parameters; writes convergence.csv.
int run_sweep(const RunConfig& config, const std::vector<int>& n_values,
              bool nested, std::ostream& log);

}  // namespace sls
