#ifndef MAPNAV_TRAJECTORY_HPP_
#define MAPNAV_TRAJECTORY_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "mapnav/dynamics.hpp"
#include "mapnav/world_state.hpp"

namespace mapnav {

struct TrajectoryRecord {
  double t = 0.0;
  Vec2 position;
  double heading = 0.0;
  Action action;  // the command applied during the step that ended at t
  double reward = 0.0;
  AgentStatus status = AgentStatus::Active;
};

/// One agent's path. The first record is the initial state at t = 0 with a
/// zero action; the last record carries the terminal status.
struct Trajectory {
  int agent_id = 0;
  std::vector<TrajectoryRecord> records;
};

/// CSV with header `t,agent_id,x,y,heading,v,omega,reward,status`, one row
/// per agent per step, ordered by step then agent. Values use shortest
/// round-trip formatting so files are byte-stable.
void write_trajectories_csv(const std::vector<Trajectory>& trajectories, std::ostream& out);
void write_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::string& path);
std::vector<Trajectory> read_trajectories_csv(std::istream& in);
std::vector<Trajectory> read_trajectories_csv_file(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace mapnav

#endif  // MAPNAV_TRAJECTORY_HPP_
