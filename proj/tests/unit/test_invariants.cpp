#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mapnav/cli.hpp"
#include "mapnav/config.hpp"
#include "mapnav/dynamics.hpp"
#include "mapnav/gaussian.hpp"
#include "mapnav/infomap.hpp"
#include "mapnav/ppo.hpp"
#include "mapnav/reward.hpp"
#include "mapnav/rng.hpp"
#include "mapnav/saliency.hpp"
#include "mapnav/sensor.hpp"
#include "mapnav/world.hpp"
#include "oracles.hpp"

using namespace mapnav;

TEST_CASE("dynamics: speed bound and rotation composition") {
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const Pose p{{rng.normal(), rng.normal()}, rng.uniform(-3, 3)};
    const Action a{rng.uniform(), rng.uniform(-1, 1)};
    const auto s = integrate(p, a, 0.1);
    CHECK(distance(s.pose.position, p.position) / 0.1 <= 1.0 + 1e-12);
  }
  for (double omega : {1.0, -0.7, 0.3}) {
    Pose p;
    for (int k = 1; k <= 200; ++k) {
      p = integrate(p, {0.0, omega}, 0.1).pose;
      // Accumulated round-off stays at the 1e-12 level.
      CHECK(std::abs(wrap_angle(p.heading - wrap_angle(k * omega * 0.1))) <= 1e-12);
    }
  }
}

TEST_CASE("sensor: removing an obstacle never shortens a beam, mirror symmetry") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    WorldState w;
    w.config.scan_beams = 33;
    for (int i = 0; i < 4; ++i) {
      const ConvexPolygon poly = ConvexPolygon::rotated_rectangle({rng.uniform(-4, 4), rng.uniform(-4, 4)},
                                                                  rng.uniform(0.2, 1), rng.uniform(0.2, 1),
                                                                  rng.uniform(0, 3));
      if (poly.distance_to({0, 0}) > 0.2) w.obstacles.push_back({poly});
    }
    if (w.obstacles.empty()) continue;
    const ScanFrame full = raycast({0, 0}, 0.0, w, -1);
    WorldState fewer = w;
    fewer.obstacles.erase(fewer.obstacles.begin());
    const ScanFrame less = raycast({0, 0}, 0.0, fewer, -1);
    for (int k = 0; k < 33; ++k) CHECK(less.ranges[k] >= full.ranges[k]);

    // Mirror across the heading axis (y -> -y).
    WorldState m = w;
    for (Obstacle& o : m.obstacles) {
      std::vector<Vec2> v = o.shape.vertices();
      for (Vec2& p : v) p.y = -p.y;
      o.shape = ConvexPolygon(v);
    }
    const ScanFrame mir = raycast({0, 0}, 0.0, m, -1);
    for (int k = 0; k < 33; ++k) CHECK(mir.ranges[32 - k] == doctest::Approx(full.ranges[k]).epsilon(1e-9));
  }
}

TEST_CASE("infomap: self always drawn, sparse work proportional to entities") {
  Rng rng(12);
  WorldConfig cfg;  // 250 x 250 cells over 500 m
  for (int i = 0; i < 20; ++i) {
    const WorldState w = oracle::random_world(rng, cfg, 20, 5);
    const int a = static_cast<int>(rng.index(w.agents.size()));
    RasterStats stats;
    const InfoMap m = rasterize_global(w, a, &stats);
    const Vec2 p = w.agents[a].position;
    if (std::abs(p.x) < 250.0 && std::abs(p.y) < 250.0)
      CHECK(std::count_if(m.cells.begin(), m.cells.end(), [](const MapCell& c) { return c.label == MapLabel::Self; }) >= 1);
    CHECK(stats.cells_tested < 250u * 250u / 10u);
    CHECK(m.cells.size() <= stats.cells_tested);
  }
}

TEST_CASE("reward: rest far from the goal is zero and steps are bounded") {
  WorldConfig cfg;
  cfg.scan_beams = 8;
  cfg.map_cells = {8, 8};
  cfg.global_extent_m = {20, 20};
  cfg.local_extent_m = {10, 10};
  AgentState a;
  a.goal = {5, 0};
  World w(cfg, RewardParams{}, {a}, {});
  const Action rest{};
  CHECK(w.step(std::span<const Action>(&rest, 1)).rewards[0] == 0.0);

  Rng rng(3);
  const RewardParams p;
  for (int i = 0; i < 2000; ++i) {
    const double d0 = rng.uniform(0, 5);
    const double d1 = std::max(0.0, d0 + rng.uniform(-0.1, 0.1));
    const double r = total_reward({goal_term(d0, d1, p), collision_term(rng.uniform() < 0.1, p),
                                   smooth_term(rng.uniform(-1, 1), p)});
    CHECK(r >= p.r_collision + p.r_smooth - 0.25 - 1e-12);
    CHECK(r <= p.r_arrival);
  }
}

TEST_CASE("squashed density: Monte Carlo integral over the action box") {
  Rng rng(100);
  const Pre mean{0.4, 0.1}, log_std{-0.5, -0.5};
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const Action a{rng.uniform(1e-12, 1.0 - 1e-12), rng.uniform(-1.0 + 1e-12, 1.0 - 1e-12)};
    sum += std::exp(action_log_prob(unsquash(a), mean, log_std));
  }
  const double integral = 2.0 * sum / n;  // box area 1 x 2
  CHECK(integral >= 0.98);
  CHECK(integral <= 1.02);
}

TEST_CASE("clipped surrogate never exceeds the unclipped one") {
  NetConfig c;
  c.scan_beams = 8;
  c.map_cells = {6, 6};
  c.scan_filters = 2;
  c.scan_fc = 4;
  c.map_filters = {2, 2, 2};
  c.map_kernel = 3;
  c.map_fc1 = 4;
  c.map_fc2 = 4;
  c.trunk1 = 8;
  c.trunk2 = 8;
  PolicyNetwork net(c);
  net.initialize(9);
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    Transition t;
    t.obs.scan.assign(c.scan_size(), 0.3);
    t.obs.local_map.dims = c.map_cells;
    t.obs.global_map.dims = c.map_cells;
    t.pre_action = {rng.normal(), rng.normal()};
    t.advantage = rng.normal();
    std::vector<double> buf;
    const NetOutput o = net.forward(make_net_input(t.obs, c, buf));
    const double logp = action_log_prob(t.pre_action, o.mean, o.log_std);
    t.log_prob = logp + rng.normal(0.0, 0.5);
    RolloutBuffer b;
    b.transitions.push_back(t);
    const std::size_t idx[1] = {0};
    const PpoLoss l = ppo_loss(net, b, idx, PpoConfig{}, {});
    const double ratio = std::exp(logp - t.log_prob);
    // Loss is the negated surrogate.
    CHECK(-l.policy <= ratio * t.advantage + 1e-12);
  }
}

TEST_CASE("saliency of a map-blind network is zero whatever the other inputs") {
  NetConfig c;
  c.scan_beams = 8;
  c.map_cells = {10, 10};
  c.scan_filters = 2;
  c.scan_fc = 4;
  c.map_filters = {2, 2, 2};
  c.map_kernel = 3;
  c.map_fc1 = 4;
  c.map_fc2 = 4;
  c.trunk1 = 8;
  c.trunk2 = 8;
  PolicyNetwork net(c);
  net.initialize(4);
  const auto [lo, hi] = net.map_param_range();
  std::fill(net.params().begin() + static_cast<std::ptrdiff_t>(lo), net.params().begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
  Rng rng(2);
  std::vector<double> map(c.map_size());
  for (double& m : map) m = static_cast<double>(rng.index(5));
  const std::vector<double> scan(c.scan_size(), 1.0);
  for (double v : {-1.0, 0.0, 2.5}) {
    const double goal[2] = {1, v}, vel[2] = {v, -v};
    SaliencyOptions o;
    o.stride = 2;
    o.blur_radius = 2;
    const SaliencyGrid g = perturbation_saliency(net, {scan, goal, vel, map}, o);
    for (double s : g.values) CHECK(s == 0.0);
  }
}

TEST_CASE("cli: the echoed config reloads to the same run") {
  namespace fs = std::filesystem;
  const fs::path d = fs::temp_directory_path() / "mapnav-unit" / "echo";
  fs::remove_all(d);
  fs::create_directories(d);
  std::ofstream(d / "c.json") << R"({"world": {"scan_beams": 8, "map_cells": [8, 8], "global_extent_m": [20, 20],
    "local_extent_m": [8, 8]}, "net": {"scan_filters": 2, "scan_fc": 4, "map_filters": [2, 2, 2], "map_kernel": 3,
    "map_fc1": 4, "map_fc2": 4, "trunk1": 8, "trunk2": 8}, "ppo": {"agents_per_env": 1},
    "train": {"free_scene": {"kind": "free_random", "n": 1, "extent_m": 4, "goal_distance_m": 1}}, "seed": 3})";
  std::ostringstream out, err;
  REQUIRE(run_cli({"mapnav", "train", "--config", (d / "c.json").string(), "--iters", "1", "--stage", "0", "--out",
                   (d / "a").string()},
                  out, err) == kExitOk);
  REQUIRE(run_cli({"mapnav", "train", "--config", (d / "a" / "config.json").string(), "--iters", "1", "--stage",
                   "0", "--out", (d / "a").string()},
                  out, err) == kExitOk);
  const RunConfig first = load_run_config(d / "a" / "config.json");
  CHECK(to_json(first) == to_json(load_run_config(d / "a" / "config.json")));
  std::ifstream log(d / "a" / "train_log.csv");
  std::stringstream s;
  s << log.rdbuf();
  const std::string text = s.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
