#ifndef MAPNAV_WORLD_HPP_
#define MAPNAV_WORLD_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mapnav/dynamics.hpp"
#include "mapnav/infomap.hpp"
#include "mapnav/metrics.hpp"
#include "mapnav/reward.hpp"
#include "mapnav/rng.hpp"
#include "mapnav/sensor.hpp"
#include "mapnav/trajectory.hpp"
#include "mapnav/world_state.hpp"

namespace mapnav {

/// What one agent perceives: stacked scans, polar goal, current velocity and
/// both motion-information maps (kept sparse until fed to a network).
struct Observation {
  std::vector<double> scan;         // scan_frames x scan_beams, oldest first
  std::array<double, 2> goal{};     // distance, bearing relative to heading
  std::array<double, 2> velocity{}; // linear, angular
  InfoMap local_map;
  InfoMap global_map;
};

struct StepReport {
  std::vector<double> rewards;
  std::vector<RewardTerms> reward_terms;
  std::vector<bool> terminal;       // status != Active after the step
  std::vector<bool> acted;          // agent was active at the start of the step
  std::vector<bool> collided;
};

/// Per-agent collision flags over active agents: another active disc closer
/// than 2R or an obstacle closer than R.
std::vector<bool> detect_collisions(const WorldState& state);

class World {
 public:
  World(WorldConfig config, RewardParams reward, std::vector<AgentState> agents,
        std::vector<Obstacle> obstacles);

  const WorldConfig& config() const { return state_.config; }
  const RewardParams& reward_params() const { return reward_; }
  const WorldState& state() const { return state_; }
  std::span<const AgentState> agents() const { return state_.agents; }
  std::span<const Obstacle> obstacles() const { return state_.obstacles; }
  double time_limit_s() const { return time_limit_s_; }
  long step_count() const { return steps_; }
  double time_s() const { return steps_ * state_.config.dt_s; }
  std::size_t active_count() const;
  bool done() const { return active_count() == 0; }

  /// Latest observation per agent. Entries of inactive agents are stale.
  const std::vector<Observation>& observations() const { return observations_; }

  /// Worker cap for observation building.
  void set_threads(int threads) { threads_ = threads; }

  /// One synchronized update. `actions` has one slot per agent; slots of
  /// inactive agents are ignored. Throws ConfigError on a count mismatch and
  /// InputError on a non-finite or out-of-range action.
  StepReport step(std::span<const Action> actions);

 private:
  Observation build_observation(std::size_t agent) const;

  WorldState state_;
  RewardParams reward_;
  double time_limit_s_ = 0.0;
  long steps_ = 0;
  std::vector<ScanStack> scans_;
  std::vector<Observation> observations_;
  int threads_ = 1;
};

/// Policies read observations from the world and fill one action per agent.
using Policy = std::function<void(const World&, Rng&, std::span<Action>)>;

Policy zero_policy();
/// Turns toward the goal and drives at full speed when roughly aligned.
Policy straight_line_policy();

struct EpisodeResult {
  std::vector<Trajectory> trajectories;
  EpisodeSummary summary;
  WorldState final_state;
};

/// Steps until every agent is terminal. Throws RuntimeAbort with a
/// diagnostic if the policy emits a non-finite action.
EpisodeResult run_episode(World world, const Policy& policy, std::uint64_t seed);

}  // namespace mapnav

#endif  // MAPNAV_WORLD_HPP_
