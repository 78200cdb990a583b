#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mapnav/checkpoint.hpp"
#include "mapnav/cli.hpp"
#include "mapnav/config.hpp"
#include "mapnav/errors.hpp"
#include "mapnav/saliency.hpp"
#include "mapnav/trainer.hpp"

using namespace mapnav;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "mapnav-unit" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int cli(std::vector<std::string> args, std::string* text = nullptr) {
  args.insert(args.begin(), "mapnav");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (text) *text = out.str() + err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kTinyConfig = R"({
  "world": {"scan_beams": 16, "map_cells": [8, 8], "global_extent_m": [24, 24], "local_extent_m": [8, 8]},
  "net": {"scan_filters": 4, "scan_fc": 16, "map_filters": [2, 2, 2], "map_kernel": 3, "map_fc1": 8,
          "map_fc2": 4, "trunk1": 16, "trunk2": 8},
  "ppo": {"agents_per_env": 2, "minibatch_size": 64},
  "train": {"free_scene": {"kind": "free_random", "n": 2, "extent_m": 5, "goal_distance_m": 1.5},
            "challenge_scenes": [{"kind": "circle_crossing", "n": 2, "radius_m": 2}]},
  "seed": 5
})";

fs::path write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

}  // namespace

// ---------------------------------------------------------------- checkpoint

TEST_CASE("checkpoint: encode/decode round trip and corruption") {
  Checkpoint ck;
  ck.meta = {{"stage", 1}};
  ck.add("a", {2, 3}, {1, 2, 3, 4, 5, 6.5});
  ck.add("b", {1}, {-0.25});
  const auto bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back.meta == ck.meta);
  REQUIRE(back.find("a"));
  CHECK(back.find("a")->data == ck.find("a")->data);
  CHECK(back.find("a")->shape == std::vector<int>{2, 3});

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), CheckpointError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), CheckpointError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), CheckpointError);
  CHECK_THROWS_AS(ck.add("c", {2}, {1.0}), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/file.ckpt"), CheckpointError);
}

TEST_CASE("checkpoint: shape check lists every problem") {
  Checkpoint ck;
  ck.add("x", {2}, {0, 0});
  ck.add("extra", {1}, {0});
  try {
    check_shapes(ck, {{"x", {3}}, {"missing", {1}}});
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x") != std::string::npos);
    CHECK(msg.find("missing") != std::string::npos);
    CHECK(msg.find("extra") != std::string::npos);
  }
}

TEST_CASE("trainer checkpoints restore the network and normalizer") {
  const RunConfig cfg = run_config_from_json(nlohmann::json::parse(kTinyConfig));
  Trainer a(cfg.world, cfg.reward, cfg.resolved_net(), cfg.ppo, cfg.train, 3);
  a.iterate(0, 0);
  const Checkpoint ck = a.checkpoint(0, 1);
  Trainer b(cfg.world, cfg.reward, cfg.resolved_net(), cfg.ppo, cfg.train, 99);
  CHECK(b.net().params() != a.net().params());
  b.restore(ck);
  CHECK(b.net().params() == a.net().params());
  CHECK(b.normalizer().scan.mean() == a.normalizer().scan.mean());
  CHECK(b.normalizer().goal.count() == a.normalizer().goal.count());

  NetConfig other = cfg.resolved_net();
  other.trunk1 = 17;
  Trainer c(cfg.world, cfg.reward, other, cfg.ppo, cfg.train, 1);
  CHECK_THROWS_AS(c.restore(ck), CheckpointError);
}

TEST_CASE("rollouts are per-agent episodes ending in a terminal step") {
  const RunConfig cfg = run_config_from_json(nlohmann::json::parse(kTinyConfig));
  PolicyNetwork net(cfg.resolved_net());
  net.initialize(1);
  ObsNormalizer norm(net.config().scan_size());
  Rng rng(4);
  const RolloutResult r =
      collect_rollout(net, norm, generate(cfg.train.free_scene, cfg.world, cfg.reward), rng, false);
  long total = 0;
  for (long len : r.episode_lengths) total += len;
  CHECK(static_cast<long>(r.buffer.size()) == total);
  CHECK(r.buffer.transitions.back().terminal);
  long terminals = 0;
  for (const Transition& t : r.buffer.transitions) terminals += t.terminal;
  CHECK(terminals == static_cast<long>(r.episode_lengths.size()));
  CHECK(r.seen.scan.count() > 0);
}

// ---------------------------------------------------------------- config

TEST_CASE("config: JSON round trip and unknown keys") {
  const RunConfig cfg = run_config_from_json(nlohmann::json::parse(kTinyConfig));
  CHECK(cfg.world.scan_beams == 16);
  CHECK(cfg.resolved_net().scan_beams == 16);
  CHECK(cfg.resolved_net().map_cells.rows == 8);
  const RunConfig back = run_config_from_json(to_json(cfg));
  CHECK(back.ppo == cfg.ppo);
  CHECK(back.net == cfg.net);
  CHECK(to_json(back) == to_json(cfg));

  auto j = nlohmann::json::parse(kTinyConfig);
  j["ppo"]["learning_rat"] = 0.1;
  try {
    run_config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("ppo.learning_rat") != std::string::npos);
  }
  auto neg = nlohmann::json::parse(kTinyConfig);
  neg["ppo"]["clip_eps"] = -1;
  CHECK_THROWS_AS(run_config_from_json(neg), ConfigError);
  CHECK_THROWS_AS(load_run_config("/no/such/config.json"), ConfigError);
}

TEST_CASE("config: scenario specs") {
  const ScenarioSpec s = scenario_from_json(nlohmann::json::parse(R"({"kind": "narrow_corridor", "n": 4, "seed": 3})"));
  CHECK(kind_name(s.kind) == "narrow_corridor");
  CHECK(agent_count(s.kind) == 4);
  CHECK(s.seed == 3);
  CHECK(to_json(scenario_from_json(to_json(s))) == to_json(s));
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"kind": "maze"})")), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"kind": "free_random", "radius_m": 1})")), ConfigError);
}

// ---------------------------------------------------------------- saliency

TEST_CASE("blur preserves constants and saliency of a uniform map is zero") {
  const std::vector<double> flat(12 * 9, 2.0);
  for (double v : gaussian_blur(flat, 12, 9, 3)) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));

  NetConfig c;
  c.scan_beams = 8;
  c.map_cells = {12, 12};
  c.scan_filters = 2;
  c.scan_fc = 4;
  c.map_filters = {2, 2, 2};
  c.map_kernel = 3;
  c.map_fc1 = 4;
  c.map_fc2 = 4;
  c.trunk1 = 8;
  c.trunk2 = 8;
  PolicyNetwork net(c);
  net.initialize(2);
  const std::vector<double> scan(c.scan_size(), 0.5), map(c.map_size(), 0.0);
  const double goal[2] = {1, 0}, vel[2] = {0, 0};
  SaliencyOptions o;
  o.stride = 3;
  o.blur_radius = 2;
  const SaliencyGrid g = perturbation_saliency(net, {scan, goal, vel, map}, o);
  CHECK(g.rows == 12);
  CHECK(g.cols == 12);
  for (double v : g.values) CHECK(v == 0.0);
}

// ---------------------------------------------------------------- cli

TEST_CASE("cli: usage and config errors") {
  std::string text;
  CHECK(cli({"train", "--config", "/no/such/file.json"}, &text) == kExitConfig);
  CHECK(text.find("/no/such/file.json") != std::string::npos);
  CHECK(cli({"frobnicate"}) == kExitConfig);
  const fs::path d = fresh_dir("cli-errors");
  const fs::path scen = write_text(d / "s.json", R"({"kind": "free_random", "n": 1})");
  CHECK(cli({"evaluate", "--scenario", scen.string(), "--seeds", "1", "--ckpt", (d / "missing.ckpt").string()}) ==
        kExitCheckpoint);
}

TEST_CASE("cli: zero-iteration training writes the initialization") {
  const fs::path d = fresh_dir("cli-train0");
  const fs::path cfg = write_text(d / "config.json", kTinyConfig);
  REQUIRE(cli({"train", "--config", cfg.string(), "--iters", "0", "--stage", "1", "--out", (d / "out").string()}) ==
          kExitOk);
  const Checkpoint ck = load_checkpoint(d / "out" / "stage1_final.ckpt");
  const RunConfig rc = load_run_config(cfg);
  const Trainer fresh(rc.world, rc.reward, rc.resolved_net(), rc.ppo, rc.train, rc.seed);
  const Checkpoint init = fresh.checkpoint(1, 0);
  for (const Tensor& t : init.tensors) {
    REQUIRE(ck.find(t.name));
    CHECK(ck.find(t.name)->data == t.data);
  }
  CHECK(slurp(d / "out" / "train_log.csv") == std::string(kTrainLogHeader) + "\n");
}

TEST_CASE("cli: scripted policies through evaluate") {
  const fs::path d = fresh_dir("cli-eval");
  const fs::path cfg = write_text(d / "config.json", kTinyConfig);
  const fs::path scen = write_text(d / "s.json", R"({"kind": "free_random", "n": 1, "extent_m": 6, "goal_distance_m": 3})");
  REQUIRE(cli({"evaluate", "--config", cfg.string(), "--scenario", scen.string(), "--seeds", "1,2", "--policy",
               "straight", "--out", (d / "straight").string()}) == kExitOk);
  const std::string straight = slurp(d / "straight" / "metrics.csv");
  CHECK(straight.find("\nall,2,1,0,0,") != std::string::npos);
  CHECK(fs::exists(d / "straight" / "traj_seed2.csv"));
  CHECK(fs::exists(d / "straight" / "metrics.md"));

  REQUIRE(cli({"evaluate", "--config", cfg.string(), "--scenario", scen.string(), "--seeds", "1", "--policy", "zero",
               "--out", (d / "zero").string()}) == kExitOk);
  CHECK(slurp(d / "zero" / "metrics.csv").find("\nall,1,0,1,0,") != std::string::npos);

  std::string text;
  REQUIRE(cli({"replay", "--config", cfg.string(), "--traj", (d / "straight" / "traj_seed1.csv").string()}, &text) ==
          kExitOk);
  CHECK(text.find("replay,1,1,0,0,") != std::string::npos);
}

TEST_CASE("cli: trained checkpoint through evaluate, saliency and scenario-gen") {
  const fs::path d = fresh_dir("cli-net");
  const fs::path cfg = write_text(d / "config.json", kTinyConfig);
  REQUIRE(cli({"train", "--config", cfg.string(), "--iters", "1", "--stage", "1", "--out", (d / "t").string()}) ==
          kExitOk);
  const fs::path scen = write_text(d / "c.json", R"({"kind": "circle_crossing", "n": 4, "radius_m": 3})");
  const fs::path ck = d / "t" / "stage1_final.ckpt";
  REQUIRE(cli({"evaluate", "--config", cfg.string(), "--ckpt", ck.string(), "--scenario", scen.string(), "--seeds",
               "4", "--out", (d / "e").string()}) == kExitOk);
  std::istringstream rows(slurp(d / "e" / "metrics.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == kMetricsCsvHeader);
  while (std::getline(rows, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 7);
    CHECK(std::stod(f[2]) + std::stod(f[3]) + std::stod(f[4]) == doctest::Approx(1.0));
  }

  REQUIRE(cli({"saliency", "--config", cfg.string(), "--ckpt", ck.string(), "--scenario", scen.string(), "--step",
               "2", "--out", (d / "s").string()}) == kExitOk);
  CHECK(fs::file_size(d / "s" / "saliency.pgm") > 64);
  CHECK(fs::exists(d / "s" / "map.pgm"));

  REQUIRE(cli({"scenario-gen", "--config", cfg.string(), "--spec", scen.string(), "--out", (d / "w.json").string()}) ==
          kExitOk);
  const auto w = nlohmann::json::parse(slurp(d / "w.json"));
  CHECK(w.at("agents").size() == 4);
}

TEST_CASE("cli: bench output and coarse sanity") {
  const fs::path d = fresh_dir("cli-bench");
  const fs::path cfg = write_text(d / "config.json", kTinyConfig);
  const fs::path scen = write_text(d / "c.json", R"({"kind": "circle_crossing", "n": 4, "radius_m": 4})");
  REQUIRE(cli({"bench", "--config", cfg.string(), "--scenario", scen.string(), "--agents", "1,2", "--steps", "5",
               "--out", (d / "b.csv").string()}) == kExitOk);
  CHECK(slurp(d / "b.csv").rfind("n,mean_step_ms,stddev_ms\n", 0) == 0);

  const RunConfig rc = load_run_config(cfg);
  const ScenarioSpec spec{CircleCrossing{4, 4.0}, 0, 0.2};
  const BenchRow one = bench_agents(rc, spec, 1, 30, 1);
  const BenchRow two = bench_agents(rc, spec, 2, 30, 1);
  CHECK(two.mean_step_ms < 4.0 * one.mean_step_ms);

  // Repeatability at a fixed agent count.
  std::vector<double> means;
  for (int i = 0; i < 5; ++i) means.push_back(bench_agents(rc, spec, 8, 20, 1).mean_step_ms);
  double mean = 0.0, var = 0.0;
  for (double m : means) mean += m / means.size();
  for (double m : means) var += (m - mean) * (m - mean) / means.size();
  CHECK(std::sqrt(var) / mean < 0.25);
}
