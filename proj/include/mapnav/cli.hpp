#ifndef MAPNAV_CLI_HPP_
#define MAPNAV_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mapnav/config.hpp"

namespace mapnav {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitCheckpoint = 3, kExitRuntime = 4 };

/// Entry point behind the `mapnav` binary. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct BenchRow {
  int n = 0;
  double mean_step_ms = 0.0;
  double stddev_ms = 0.0;
};

/// Wall time of one synchronized step (policy inference, physics, scans and
/// map building) with a random-weight network, averaged over `steps` steps
/// after one warm-up step.
BenchRow bench_agents(const RunConfig& config, ScenarioSpec scenario, int n, int steps, std::uint64_t seed);

}  // namespace mapnav

#endif  // MAPNAV_CLI_HPP_
