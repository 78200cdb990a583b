#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mapnav/errors.hpp"
#include "mapnav/reward.hpp"
#include "mapnav/rng.hpp"
#include "mapnav/trajectory.hpp"
#include "mapnav/world.hpp"

using namespace mapnav;

namespace {

WorldConfig small_config() {
  WorldConfig c;
  c.scan_beams = 16;
  c.map_cells = {16, 16};
  c.global_extent_m = {40, 40};
  c.local_extent_m = {10, 10};
  return c;
}

AgentState agent_at(Vec2 p, Vec2 goal, double heading = 0.0) {
  AgentState a;
  a.position = p;
  a.goal = goal;
  a.heading_rad = heading;
  return a;
}

}  // namespace

TEST_CASE("step: one agent approaching its goal") {
  World w(small_config(), RewardParams{}, {agent_at({0, 0}, {1, 0})}, {});
  const Action act{1.0, 0.0};
  const StepReport r = w.step(std::span<const Action>(&act, 1));
  CHECK(w.agents()[0].position.x == doctest::Approx(0.1));
  CHECK(r.rewards[0] == doctest::Approx(0.25));
  CHECK_FALSE(r.terminal[0]);
  CHECK(w.observations()[0].scan.size() == 3 * 16);
}

TEST_CASE("step: argument checks") {
  World w(small_config(), RewardParams{}, {agent_at({0, 0}, {1, 0})}, {});
  const Action two[2] = {{0, 0}, {0, 0}};
  CHECK_THROWS_AS(w.step(two), ConfigError);
  const Action bad{std::nan(""), 0.0};
  CHECK_THROWS_AS(w.step(std::span<const Action>(&bad, 1)), InputError);
}

TEST_CASE("collisions: strict separation against agents and obstacles") {
  const WorldConfig cfg = small_config();
  {
    WorldState s;
    s.config = cfg;
    s.agents = {agent_at({0, 0}, {5, 5}), agent_at({0.24, 0}, {-5, 5})};
    const auto f = detect_collisions(s);
    CHECK_FALSE(f[0]);
    CHECK_FALSE(f[1]);
    s.agents[1].position.x = 0.2;
    CHECK(detect_collisions(s)[0]);
  }
  {
    WorldState s;
    s.config = cfg;
    s.agents = {agent_at({0, 0}, {5, 5})};
    s.obstacles.push_back({ConvexPolygon::rectangle({0.11, -1}, {1, 1})});
    CHECK(detect_collisions(s)[0]);
    s.obstacles[0] = {ConvexPolygon::rectangle({0.12, -1}, {1, 1})};
    CHECK_FALSE(detect_collisions(s)[0]);
  }
}

TEST_CASE("collisions: equal to an all-pairs oracle") {
  Rng rng(50);
  for (int trial = 0; trial < 30; ++trial) {
    WorldState s;
    s.config = small_config();
    for (int i = 0; i < 50; ++i) {
      AgentState a = agent_at({rng.uniform(-5, 5), rng.uniform(-5, 5)}, {0, 0});
      if (rng.uniform() < 0.1) a.status = AgentStatus::Arrived;
      s.agents.push_back(a);
    }
    for (int i = 0; i < 5; ++i)
      s.obstacles.push_back({ConvexPolygon::rotated_rectangle({rng.uniform(-5, 5), rng.uniform(-5, 5)},
                                                              rng.uniform(0.1, 1), rng.uniform(0.1, 1),
                                                              rng.uniform(0, 3))});
    const auto flags = detect_collisions(s);
    const double r = s.config.robot_radius_m;
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
      bool hit = false;
      if (s.agents[i].active()) {
        for (std::size_t j = 0; j < s.agents.size(); ++j)
          if (j != i && s.agents[j].active() && distance(s.agents[i].position, s.agents[j].position) < 2 * r)
            hit = true;
        for (const Obstacle& o : s.obstacles)
          if (o.shape.distance_to(s.agents[i].position) < r) hit = true;
      }
      CHECK(flags[i] == hit);
    }
  }
}

TEST_CASE("step: collision and arrival resolve status and reward") {
  {
    World w(small_config(), RewardParams{}, {agent_at({0, 0}, {5, 5}), agent_at({0.2, 0}, {-5, 5})}, {});
    const Action acts[2] = {};
    const StepReport r = w.step(acts);
    CHECK(r.rewards[0] == -15.0);
    CHECK(r.rewards[1] == -15.0);
    CHECK(w.agents()[0].status == AgentStatus::Collided);
    CHECK(w.done());
  }
  {
    World w(small_config(), RewardParams{}, {agent_at({0, 0}, {0.05, 0})}, {});
    const Action act{};
    const StepReport r = w.step(std::span<const Action>(&act, 1));
    CHECK(r.rewards[0] == 15.0);
    CHECK(w.agents()[0].status == AgentStatus::Arrived);
  }
}

TEST_CASE("run_episode: straight-line policy arrives on time") {
  World w(small_config(), RewardParams{}, {agent_at({0, 0}, {5, 0})}, {});
  const EpisodeResult r = run_episode(std::move(w), straight_line_policy(), 1);
  REQUIRE(r.summary.agents.size() == 1);
  CHECK(r.summary.agents[0].status == AgentStatus::Arrived);
  CHECK(std::abs(r.summary.agents[0].travel_time_s - 5.0) <= 0.1 + 1e-9);
  CHECK(r.summary.success_rate == 1.0);
}

TEST_CASE("run_episode: zero policy is stuck at the time limit") {
  WorldConfig cfg = small_config();
  cfg.time_limit_s = 10.0;
  World w(cfg, RewardParams{}, {agent_at({0, 0}, {5, 0}), agent_at({0, 3}, {5, 3})}, {});
  const EpisodeResult r = run_episode(std::move(w), zero_policy(), 1);
  for (const AgentSummary& a : r.summary.agents) {
    CHECK(a.status == AgentStatus::Stuck);
    CHECK(a.travel_time_s == doctest::Approx(10.0));
  }
  CHECK(r.summary.stuck_rate == 1.0);
}

TEST_CASE("run_episode: non-finite actions abort") {
  World w(small_config(), RewardParams{}, {agent_at({0, 0}, {5, 0})}, {});
  const Policy nan_policy = [](const World&, Rng&, std::span<Action> acts) {
    for (Action& a : acts) a = {std::nan(""), 0.0};
  };
  CHECK_THROWS_AS(run_episode(std::move(w), nan_policy, 1), RuntimeAbort);
}

TEST_CASE("run_episode: statuses are monotone and output is reproducible") {
  auto make = [] {
    std::vector<AgentState> agents;
    for (int i = 0; i < 6; ++i) {
      const double a = i * 2 * std::numbers::pi / 6;
      agents.push_back(agent_at({3 * std::cos(a), 3 * std::sin(a)}, {-3 * std::cos(a), -3 * std::sin(a)}, a + 3.14));
    }
    return World(small_config(), RewardParams{}, agents, {});
  };
  const Policy noisy = [](const World& w, Rng& rng, std::span<Action> acts) {
    straight_line_policy()(w, rng, acts);
    for (Action& a : acts) a.omega = std::clamp(a.omega + 0.3 * rng.normal(), -1.0, 1.0);
  };
  const EpisodeResult a = run_episode(make(), noisy, 9);
  const EpisodeResult b = run_episode(make(), noisy, 9);
  std::ostringstream sa, sb;
  write_trajectories_csv(a.trajectories, sa);
  write_trajectories_csv(b.trajectories, sb);
  CHECK(sa.str() == sb.str());
  for (const Trajectory& t : a.trajectories) {
    bool terminal = false;
    for (const TrajectoryRecord& r : t.records) {
      if (terminal) CHECK(r.status == t.records.back().status);
      terminal = terminal || r.status != AgentStatus::Active;
    }
    CHECK(t.records.back().status != AgentStatus::Active);
  }
}

TEST_CASE("trajectory CSV round trip") {
  World w(small_config(), RewardParams{}, {agent_at({0, 0}, {1, 0}), agent_at({0, 2}, {1, 2})}, {});
  const EpisodeResult r = run_episode(std::move(w), straight_line_policy(), 3);
  std::stringstream s;
  write_trajectories_csv(r.trajectories, s);
  const auto back = read_trajectories_csv(s);
  REQUIRE(back.size() == r.trajectories.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].records.size() == r.trajectories[i].records.size());
    for (std::size_t k = 0; k < back[i].records.size(); ++k) {
      CHECK(back[i].records[k].position == r.trajectories[i].records[k].position);
      CHECK(back[i].records[k].status == r.trajectories[i].records[k].status);
    }
  }
}

TEST_CASE("reward terms") {
  const RewardParams p;
  CHECK(goal_term(5.0, 4.9, p) == doctest::Approx(0.25));
  CHECK(goal_term(4.9, 5.0, p) == doctest::Approx(-0.25));
  CHECK(goal_term(1.0, 0.05, p) == 15.0);
  CHECK(collision_term(true, p) == -15.0);
  CHECK(collision_term(false, p) == 0.0);
  CHECK(smooth_term(0.8, p) == doctest::Approx(-0.08));
  CHECK(smooth_term(0.7, p) == 0.0);
  CHECK(smooth_term(-0.9, p) == doctest::Approx(-0.09));
  CHECK(total_reward({0.25, 0, 0}) == 0.25);
  CHECK(total_reward({15, 0, -0.08}) == doctest::Approx(14.92));
  CHECK(total_reward({0, -15, 0}) == -15.0);
  CHECK_THROWS_AS(goal_term(std::nan(""), 1.0, p), InputError);
}
