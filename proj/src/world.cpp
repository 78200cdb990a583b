#include "mapnav/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "mapnav/errors.hpp"
#include "mapnav/parallel.hpp"

namespace mapnav {

void WorldConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("world.") + name + " must be > 0");
  };
  positive(robot_radius_m, "robot_radius_m");
  positive(global_extent_m.height, "global_extent_m[0]");
  positive(global_extent_m.width, "global_extent_m[1]");
  positive(local_extent_m.height, "local_extent_m[0]");
  positive(local_extent_m.width, "local_extent_m[1]");
  positive(dt_s, "dt_s");
  positive(v_max_mps, "v_max_mps");
  positive(scan_range_m, "scan_range_m");
  if (map_cells.rows < 1 || map_cells.cols < 1) throw ConfigError("world.map_cells must be >= 1");
  if (local_extent_m.height > global_extent_m.height || local_extent_m.width > global_extent_m.width)
    throw ConfigError("world.local_extent_m must not exceed global_extent_m");
  if (scan_beams < 1) throw ConfigError("world.scan_beams must be >= 1");
  if (scan_frames < 1) throw ConfigError("world.scan_frames must be >= 1");
  if (!(scan_fov_rad >= 0.0) || !std::isfinite(scan_fov_rad)) throw ConfigError("world.scan_fov_rad must be >= 0");
  if (!std::isfinite(time_limit_s)) throw ConfigError("world.time_limit_s must be finite");
}

std::string to_string(AgentStatus status) {
  switch (status) {
    case AgentStatus::Active: return "active";
    case AgentStatus::Arrived: return "arrived";
    case AgentStatus::Collided: return "collided";
    case AgentStatus::Stuck: return "stuck";
  }
  return "active";
}

AgentStatus parse_status(const std::string& text) {
  if (text == "active") return AgentStatus::Active;
  if (text == "arrived") return AgentStatus::Arrived;
  if (text == "collided") return AgentStatus::Collided;
  if (text == "stuck") return AgentStatus::Stuck;
  throw InputError("unknown agent status '" + text + "'");
}

std::vector<bool> detect_collisions(const WorldState& state) {
  const std::size_t n = state.agents.size();
  const double r = state.config.robot_radius_m;
  const double sep2 = 4.0 * r * r;
  std::vector<bool> flags(n, false);

  // Uniform hash grid with cell size 2R: colliding pairs share or neighbor a cell.
  const double cell = 2.0 * r;
  auto key = [](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };
  std::unordered_map<long long, std::vector<std::size_t>> grid;
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.agents[i].active()) continue;
    const Vec2 p = state.agents[i].position;
    grid[key(static_cast<long long>(std::floor(p.x / cell)), static_cast<long long>(std::floor(p.y / cell)))]
        .push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const AgentState& a = state.agents[i];
    if (!a.active()) continue;
    const long long cx = static_cast<long long>(std::floor(a.position.x / cell));
    const long long cy = static_cast<long long>(std::floor(a.position.y / cell));
    for (long long dx = -1; dx <= 1 && !flags[i]; ++dx) {
      for (long long dy = -1; dy <= 1 && !flags[i]; ++dy) {
        const auto it = grid.find(key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (std::size_t j : it->second) {
          if (j != i && (a.position - state.agents[j].position).squared_norm() < sep2) {
            flags[i] = true;
            break;
          }
        }
      }
    }
    if (flags[i]) continue;
    for (const Obstacle& ob : state.obstacles) {
      const Aabb& b = ob.shape.bounds();
      if (a.position.x < b.min.x - r || a.position.x > b.max.x + r || a.position.y < b.min.y - r ||
          a.position.y > b.max.y + r)
        continue;
      if (ob.shape.distance_to(a.position) < r) {
        flags[i] = true;
        break;
      }
    }
  }
  return flags;
}

World::World(WorldConfig config, RewardParams reward, std::vector<AgentState> agents,
             std::vector<Obstacle> obstacles)
    : reward_(reward) {
  config.validate();
  reward.validate();
  state_.config = config;
  state_.agents = std::move(agents);
  state_.obstacles = std::move(obstacles);

  double longest = 0.0;
  for (AgentState& a : state_.agents) {
    if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y) || !std::isfinite(a.goal.x) ||
        !std::isfinite(a.goal.y) || !std::isfinite(a.heading_rad))
      throw InputError("world: agent state is not finite");
    a.heading_rad = wrap_angle(a.heading_rad);
    a.start = a.position;
    longest = std::max(longest, distance(a.position, a.goal));
  }
  time_limit_s_ = config.time_limit_s > 0.0 ? config.time_limit_s : 2.0 * longest / config.v_max_mps + 20.0;

  scans_.resize(state_.agents.size());
  observations_.resize(state_.agents.size());
  parallel_for(state_.agents.size(), threads_, [&](std::size_t i) {
    const AgentState& a = state_.agents[i];
    scans_[i] = make_scan_stack(raycast(a.position, a.heading_rad, state_, static_cast<int>(i)),
                                config.scan_frames);
    observations_[i] = build_observation(i);
  });
}

std::size_t World::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(state_.agents.begin(), state_.agents.end(), [](const AgentState& a) { return a.active(); }));
}

Observation World::build_observation(std::size_t i) const {
  const AgentState& a = state_.agents[i];
  Observation obs;
  obs.scan.reserve(static_cast<std::size_t>(state_.config.scan_frames) * state_.config.scan_beams);
  for (const ScanFrame& f : scans_[i].frames) obs.scan.insert(obs.scan.end(), f.ranges.begin(), f.ranges.end());
  const Vec2 to_goal = a.goal - a.position;
  obs.goal = {to_goal.norm(), wrap_angle(std::atan2(to_goal.y, to_goal.x) - a.heading_rad)};
  obs.velocity = {a.linear_speed_mps, a.angular_speed_rps};
  obs.local_map = rasterize_local(state_, static_cast<int>(i));
  obs.global_map = rasterize_global(state_, static_cast<int>(i));
  return obs;
}

StepReport World::step(std::span<const Action> actions) {
  const std::size_t n = state_.agents.size();
  if (actions.size() != n) {
    std::ostringstream msg;
    msg << "step: expected " << n << " actions, got " << actions.size();
    throw ConfigError(msg.str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!state_.agents[i].active()) continue;
    try {
      check_action(actions[i]);
    } catch (const InputError& e) {
      throw InputError("agent " + std::to_string(i) + ": " + e.what());
    }
  }

  StepReport report;
  report.rewards.assign(n, 0.0);
  report.reward_terms.assign(n, RewardTerms{});
  report.terminal.assign(n, false);
  report.acted.assign(n, false);
  report.collided.assign(n, false);

  const double dt = state_.config.dt_s;
  std::vector<double> prev_dist(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    AgentState& a = state_.agents[i];
    if (!a.active()) continue;
    report.acted[i] = true;
    prev_dist[i] = distance(a.position, a.goal);
    const Action cmd{actions[i].v * state_.config.v_max_mps, actions[i].omega};
    const IntegrationResult next = integrate({a.position, a.heading_rad}, cmd, dt);
    a.path_length_m += distance(next.pose.position, a.position);
    a.position = next.pose.position;
    a.heading_rad = next.pose.heading;
    a.linear_speed_mps = cmd.v;
    a.angular_speed_rps = cmd.omega;
  }
  ++steps_;

  // Collision first; a collided agent neither arrives nor collects other terms.
  const std::vector<bool> collided = detect_collisions(state_);
  const double now = time_s();
  for (std::size_t i = 0; i < n; ++i) {
    AgentState& a = state_.agents[i];
    if (!report.acted[i]) {
      report.terminal[i] = true;
      continue;
    }
    a.elapsed_s = now;
    RewardTerms terms;
    if (collided[i]) {
      terms.collision = collision_term(true, reward_);
      a.status = AgentStatus::Collided;
      report.collided[i] = true;
    } else {
      const double cur = distance(a.position, a.goal);
      terms.goal = goal_term(prev_dist[i], cur, reward_);
      terms.smooth = smooth_term(actions[i].omega, reward_);
      if (cur < reward_.arrival_dist_m) {
        a.status = AgentStatus::Arrived;
      } else if (now >= time_limit_s_ - 1e-9 * dt) {
        a.status = AgentStatus::Stuck;
      }
    }
    report.reward_terms[i] = terms;
    report.rewards[i] = total_reward(terms);
    report.terminal[i] = !a.active();
  }

  parallel_for(n, threads_, [&](std::size_t i) {
    const AgentState& a = state_.agents[i];
    if (!a.active()) return;
    scans_[i] = push_frame(std::move(scans_[i]), raycast(a.position, a.heading_rad, state_, static_cast<int>(i)));
    observations_[i] = build_observation(i);
  });
  return report;
}

Policy zero_policy() {
  return [](const World&, Rng&, std::span<Action> out) {
    std::fill(out.begin(), out.end(), Action{0.0, 0.0});
  };
}

Policy straight_line_policy() {
  return [](const World& world, Rng&, std::span<Action> out) {
    const double dt = world.config().dt_s;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double bearing = world.observations()[i].goal[1];
      const double omega = std::clamp(bearing / dt, -kActionOmegaMax, kActionOmegaMax);
      out[i] = {std::clamp(std::cos(bearing), 0.0, 1.0), omega};
    }
  };
}

EpisodeResult run_episode(World world, const Policy& policy, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = world.agents().size();
  EpisodeResult result;
  result.trajectories.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AgentState& a = world.agents()[i];
    result.trajectories[i].agent_id = static_cast<int>(i);
    result.trajectories[i].records.push_back({0.0, a.position, a.heading_rad, {}, 0.0, a.status});
  }

  const long max_steps = static_cast<long>(std::ceil(world.time_limit_s() / world.config().dt_s)) + 2;
  std::vector<Action> actions(n);
  while (!world.done()) {
    if (world.step_count() > max_steps) throw RuntimeAbort("episode exceeded its step budget");
    std::fill(actions.begin(), actions.end(), Action{});
    policy(world, rng, actions);
    for (std::size_t i = 0; i < n; ++i) {
      if (!world.agents()[i].active()) continue;
      if (!std::isfinite(actions[i].v) || !std::isfinite(actions[i].omega)) {
        std::ostringstream msg;
        msg << "policy returned a non-finite action for agent " << i << " at t=" << world.time_s();
        throw RuntimeAbort(msg.str());
      }
    }
    const StepReport report = world.step(actions);
    for (std::size_t i = 0; i < n; ++i) {
      if (!report.acted[i]) continue;
      const AgentState& a = world.agents()[i];
      result.trajectories[i].records.push_back(
          {world.time_s(), a.position, a.heading_rad, actions[i], report.rewards[i], a.status});
    }
  }
  result.summary = compute_metrics(result.trajectories, world.config().v_max_mps);
  result.final_state = world.state();
  return result;
}

}  // namespace mapnav
