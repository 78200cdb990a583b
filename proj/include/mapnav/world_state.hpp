#ifndef MAPNAV_WORLD_STATE_HPP_
#define MAPNAV_WORLD_STATE_HPP_

#include <numbers>
#include <string>
#include <vector>

#include "mapnav/geometry.hpp"

namespace mapnav {

struct Extent {
  double height = 0.0;  // along x, paired with map rows
  double width = 0.0;   // along y, paired with map columns
  bool operator==(const Extent&) const = default;
};

struct GridSize {
  int rows = 0;
  int cols = 0;
  bool operator==(const GridSize&) const = default;
};

struct WorldConfig {
  double robot_radius_m = 0.12;
  Extent global_extent_m{500.0, 500.0};
  GridSize map_cells{250, 250};
  Extent local_extent_m{250.0, 250.0};
  double dt_s = 0.1;
  double v_max_mps = 1.0;
  int scan_beams = 512;
  double scan_fov_rad = std::numbers::pi;
  double scan_range_m = 4.0;
  int scan_frames = 3;
  // <= 0 means "derive from the scenario": 2 * max straight distance / v_max + 20.
  double time_limit_s = 0.0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

enum class AgentStatus { Active, Arrived, Collided, Stuck };

std::string to_string(AgentStatus status);
AgentStatus parse_status(const std::string& text);

struct AgentState {
  Vec2 position;
  double heading_rad = 0.0;
  double linear_speed_mps = 0.0;
  double angular_speed_rps = 0.0;
  Vec2 goal;
  AgentStatus status = AgentStatus::Active;
  double path_length_m = 0.0;
  double elapsed_s = 0.0;
  Vec2 start;

  bool active() const { return status == AgentStatus::Active; }
};

struct Obstacle {
  ConvexPolygon shape;
};

/// Plain snapshot of everything the sensor and map builders look at.
struct WorldState {
  WorldConfig config;
  std::vector<AgentState> agents;
  std::vector<Obstacle> obstacles;
};

}  // namespace mapnav

#endif  // MAPNAV_WORLD_STATE_HPP_
