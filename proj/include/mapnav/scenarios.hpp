#ifndef MAPNAV_SCENARIOS_HPP_
#define MAPNAV_SCENARIOS_HPP_

#include <cstdint>
#include <string>
#include <variant>

#include "mapnav/world.hpp"

namespace mapnav {

struct CircleCrossing {
  int n = 4;
  double radius_m = 8.0;
};

/// Two groups swap sides through a slit in a wall.
struct NarrowCorridor {
  int n = 6;
  double corridor_width_m = 0.0;  // <= 0: four robot radii
  double corridor_length_m = 4.0;
};

struct RoomWithObstacles {
  int n = 10;
  int obstacle_count = 6;
  double room_size_m = 10.0;
};

struct RandomStartsGoals {
  int n = 20;
  int obstacle_count = 6;
  double extent_m = 12.0;
};

struct RoomEvacuation {
  int n = 6;
  double door_width_m = 1.0;
  double room_size_m = 6.0;
};

/// Obstacle-free square with random starts; goals either uniform or at a
/// fixed distance from the start.
struct FreeRandom {
  int n = 20;
  double extent_m = 10.0;
  double goal_distance_m = 0.0;
};

using ScenarioKind =
    std::variant<CircleCrossing, NarrowCorridor, RoomWithObstacles, RandomStartsGoals, RoomEvacuation, FreeRandom>;

struct ScenarioSpec {
  ScenarioKind kind = CircleCrossing{};
  std::uint64_t seed = 0;
  double clearance_m = 0.2;  // extra gap on top of 2R between starts, goals and walls
};

std::string kind_name(const ScenarioKind& kind);
int agent_count(const ScenarioKind& kind);
void set_agent_count(ScenarioKind& kind, int n);

inline constexpr long kMaxRejectionAttempts = 100000;

/// Deterministic in (spec, config). Throws GenerationError when the agents
/// cannot be placed with the required separation.
WorldState generate_state(const ScenarioSpec& spec, const WorldConfig& config);
World generate(const ScenarioSpec& spec, const WorldConfig& config, const RewardParams& reward);

}  // namespace mapnav

#endif  // MAPNAV_SCENARIOS_HPP_
