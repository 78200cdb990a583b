#include <doctest.h>

#include <cmath>

#include "mapnav/errors.hpp"
#include "mapnav/metrics.hpp"
#include "mapnav/scenarios.hpp"

using namespace mapnav;

TEST_CASE("circle crossing places antipodal goals") {
  const WorldState s = generate_state({CircleCrossing{4, 8.0}, 0, 0.2}, WorldConfig{});
  REQUIRE(s.agents.size() == 4);
  CHECK(s.agents[0].position.x == doctest::Approx(8.0));
  CHECK(s.agents[0].position.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.agents[0].goal.x == doctest::Approx(-8.0));
  CHECK(s.agents[1].position.y == doctest::Approx(8.0));
  CHECK(s.agents[1].goal.y == doctest::Approx(-8.0));
  const WorldState big = generate_state({CircleCrossing{30, 8.0}, 0, 0.2}, WorldConfig{});
  for (const AgentState& a : big.agents) CHECK(distance(a.position, a.goal) == doctest::Approx(16.0));
}

TEST_CASE("every scenario family is feasible and seed-determined") {
  const std::vector<ScenarioKind> kinds = {CircleCrossing{}, NarrowCorridor{}, RoomWithObstacles{},
                                           RandomStartsGoals{}, RoomEvacuation{}, FreeRandom{}};
  const WorldConfig cfg;
  for (const ScenarioKind& kind : kinds) {
    CAPTURE(kind_name(kind));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const WorldState s = generate_state({kind, seed, 0.2}, cfg);
      CHECK(static_cast<int>(s.agents.size()) == agent_count(kind));
      const double r = cfg.robot_radius_m;
      for (std::size_t i = 0; i < s.agents.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          CHECK(distance(s.agents[i].position, s.agents[j].position) > 2 * r);
          CHECK(distance(s.agents[i].goal, s.agents[j].goal) > 2 * r);
        }
        for (const Obstacle& o : s.obstacles) {
          CHECK(o.shape.distance_to(s.agents[i].position) > r);
          CHECK(o.shape.distance_to(s.agents[i].goal) > r);
        }
      }
      const WorldState again = generate_state({kind, seed, 0.2}, cfg);
      for (std::size_t i = 0; i < s.agents.size(); ++i) {
        CHECK(again.agents[i].position == s.agents[i].position);
        CHECK(again.agents[i].goal == s.agents[i].goal);
      }
    }
  }
}

TEST_CASE("random starts keep pairwise separation for n = 20") {
  const WorldState s = generate_state({RandomStartsGoals{20, 6, 12.0}, 77, 0.2}, WorldConfig{});
  for (std::size_t i = 0; i < s.agents.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) CHECK(distance(s.agents[i].position, s.agents[j].position) > 0.24);
}

TEST_CASE("infeasible scenarios raise GenerationError") {
  CHECK_THROWS_AS(generate_state({CircleCrossing{200, 1.0}, 0, 0.2}, WorldConfig{}), GenerationError);
  CHECK_THROWS_AS(generate_state({FreeRandom{500, 2.0, 0.0}, 0, 0.2}, WorldConfig{}), GenerationError);
  CHECK_THROWS_AS(generate_state({RoomEvacuation{6, 0.1, 6.0}, 0, 0.2}, WorldConfig{}), GenerationError);
}

TEST_CASE("set_agent_count and names") {
  ScenarioKind k = FreeRandom{};
  set_agent_count(k, 7);
  CHECK(agent_count(k) == 7);
  CHECK(kind_name(k) == "free_random");
  CHECK(kind_name(CircleCrossing{}) == "circle_crossing");
}

namespace {

Trajectory line(int id, double dist, double time, AgentStatus end) {
  Trajectory t{id, {}};
  const int steps = static_cast<int>(std::lround(time / 0.1));
  for (int k = 0; k <= steps; ++k)
    t.records.push_back({k * 0.1, {dist * k / steps, 0.0}, 0.0, {}, 0.0, k == steps ? end : AgentStatus::Active});
  return t;
}

}  // namespace

TEST_CASE("metrics: single agent 10 m in 12 s") {
  Trajectory t = line(0, 10.0, 12.0, AgentStatus::Arrived);
  const EpisodeSummary s = compute_metrics({t}, 1.0);
  REQUIRE(s.extra_time_s);
  CHECK(*s.extra_time_s == doctest::Approx(2.0));
  CHECK(*s.avg_speed_mps == doctest::Approx(10.0 / 12.0));
}

TEST_CASE("metrics: rates") {
  const EpisodeSummary all = compute_metrics(
      {line(0, 2, 2, AgentStatus::Arrived), line(1, 3, 3, AgentStatus::Arrived)}, 1.0);
  CHECK(all.success_rate == 1.0);
  CHECK(all.stuck_rate == 0.0);
  CHECK(all.collision_rate == 0.0);

  const EpisodeSummary mixed = compute_metrics({line(0, 2, 2, AgentStatus::Arrived), line(1, 3, 3, AgentStatus::Arrived),
                                                line(2, 1, 5, AgentStatus::Stuck), line(3, 1, 1, AgentStatus::Collided)},
                                               1.0);
  CHECK(mixed.success_rate == 0.5);
  CHECK(mixed.stuck_rate == 0.25);
  CHECK(mixed.collision_rate == 0.25);
  CHECK(mixed.success_rate + mixed.stuck_rate + mixed.collision_rate == 1.0);

  const EpisodeSummary none = compute_metrics({line(0, 1, 5, AgentStatus::Stuck)}, 1.0);
  CHECK_FALSE(none.extra_time_s);
}

TEST_CASE("metrics: merging and formatting") {
  const EpisodeSummary a = compute_metrics({line(0, 2, 4, AgentStatus::Arrived)}, 1.0);
  const EpisodeSummary b = compute_metrics({line(0, 1, 5, AgentStatus::Stuck)}, 1.0);
  const EpisodeSummary m = merge_summaries({a, b}, 1.0);
  CHECK(m.success_rate == 0.5);
  CHECK(*m.extra_time_s == doctest::Approx(2.0));
  const std::string row = metrics_csv_row("all", m);
  CHECK(row.rfind("all,", 0) == 0);
  const std::string md = metrics_markdown("circle", {{"ours", {{1, a}, {1, b}}}});
  CHECK(md.find("ours") != std::string::npos);
  CHECK_THROWS_AS(compute_metrics({}, 1.0), InputError);
  CHECK_THROWS_AS(compute_metrics({line(0, 1, 1, AgentStatus::Active)}, 1.0), InputError);
}
