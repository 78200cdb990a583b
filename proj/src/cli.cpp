#include "mapnav/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "mapnav/checkpoint.hpp"
#include "mapnav/errors.hpp"
#include "mapnav/metrics.hpp"
#include "mapnav/saliency.hpp"
#include "mapnav/trainer.hpp"
#include "mapnav/trajectory.hpp"

namespace mapnav {

namespace fs = std::filesystem;

namespace {

RunConfig config_or_default(const std::string& path) {
  if (path.empty()) {
    RunConfig c;
    c.validate();
    return c;
  }
  return load_run_config(path);
}

struct LoadedNet {
  std::shared_ptr<PolicyNetwork> net;
  std::shared_ptr<ObsNormalizer> norm;
};

LoadedNet load_net(const RunConfig& config, const std::string& ckpt_path) {
  LoadedNet l;
  l.net = std::make_shared<PolicyNetwork>(config.resolved_net());
  l.norm = std::make_shared<ObsNormalizer>(l.net->config().scan_size());
  apply_checkpoint(load_checkpoint(ckpt_path), *l.net, *l.norm);
  return l;
}

Policy pick_policy(const std::string& name, const RunConfig& config, const std::string& ckpt, bool& needs_ckpt) {
  needs_ckpt = name == "net";
  if (name == "straight") return straight_line_policy();
  if (name == "zero") return zero_policy();
  if (name != "net") throw ConfigError("--policy must be net, straight or zero");
  if (ckpt.empty()) throw ConfigError("--policy net requires --ckpt");
  LoadedNet l = load_net(config, ckpt);
  return make_net_policy(l.net, l.norm, {true, false, config.threads});
}

std::string status_counts(const EpisodeSummary& s) {
  return "success " + format_double(s.success_rate) + ", stuck " + format_double(s.stuck_rate) + ", collision " +
         format_double(s.collision_rate);
}

// ---------------------------------------------------------------- subcommands

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> iters,
              std::optional<int> stage, const std::string& out_dir, std::optional<int> threads,
              const std::string& resume, std::ostream& out) {
  RunConfig config = load_run_config(config_path);
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  if (!out_dir.empty()) config.out_dir = out_dir;
  config.validate();

  TrainRequest req;
  req.world = config.world;
  req.reward = config.reward;
  req.net = config.resolved_net();
  req.ppo = config.ppo;
  req.settings = config.train;
  req.seed = config.seed;
  req.threads = config.threads;
  req.out_dir = config.out_dir;
  if (stage) {
    if (*stage < 0 || *stage > 2) throw ConfigError("--stage must be 0, 1 or 2");
    req.stages = {*stage};
  }
  req.iters = iters;
  if (!resume.empty()) req.init_checkpoint = resume;

  fs::create_directories(req.out_dir);
  save_json(to_json(config), req.out_dir / "config.json");
  const TrainReport report = train(req);
  out << "trained " << report.log.size() << " iterations; final checkpoint " << report.final_checkpoint.string()
      << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& ckpt, const std::string& scenario_path,
                 const std::vector<std::uint64_t>& seeds, const std::string& policy_name, const std::string& out_dir,
                 std::ostream& out) {
  RunConfig config = config_or_default(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  const ScenarioSpec base = load_scenario(scenario_path);
  if (seeds.empty()) throw ConfigError("--seeds must list at least one seed");

  bool needs_ckpt = false;
  const Policy policy = pick_policy(policy_name, config, ckpt, needs_ckpt);
  fs::create_directories(config.out_dir);
  const fs::path dir = config.out_dir;

  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw ConfigError("cannot write " + (dir / "metrics.csv").string());
  csv << kMetricsCsvHeader << '\n';
  std::vector<EpisodeSummary> summaries;
  for (std::uint64_t seed : seeds) {
    ScenarioSpec spec = base;
    spec.seed = seed;
    World world = generate(spec, config.world, config.reward);
    world.set_threads(config.threads);
    const EpisodeResult result = run_episode(std::move(world), policy, seed);
    write_trajectories_csv(result.trajectories, (dir / ("traj_seed" + std::to_string(seed) + ".csv")).string());
    csv << metrics_csv_row(std::to_string(seed), result.summary) << '\n';
    out << "seed " << seed << ": " << status_counts(result.summary) << '\n';
    summaries.push_back(result.summary);
  }
  const EpisodeSummary all = merge_summaries(summaries, config.world.v_max_mps);
  csv << metrics_csv_row("all", all) << '\n';

  const std::string md = metrics_markdown(kind_name(base.kind), {{policy_name, {{agent_count(base.kind), all}}}});
  std::ofstream(dir / "metrics.md") << md;
  save_json(to_json(config), dir / "config.json");
  out << md;
  return kExitOk;
}

int cmd_replay(const std::string& traj_path, const std::string& config_path, std::ostream& out) {
  const RunConfig config = config_or_default(config_path);
  const std::vector<Trajectory> trajs = read_trajectories_csv_file(traj_path);
  const EpisodeSummary s = compute_metrics(trajs, config.world.v_max_mps);
  out << kMetricsCsvHeader << '\n' << metrics_csv_row("replay", s) << '\n';
  return kExitOk;
}

int cmd_saliency(const std::string& config_path, const std::string& ckpt, const std::string& scenario_path,
                 long step, int agent, const std::string& out_dir, std::ostream& out) {
  RunConfig config = config_or_default(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  const ScenarioSpec spec = load_scenario(scenario_path);
  LoadedNet l = load_net(config, ckpt);
  if (step < 0) throw ConfigError("--step must be >= 0");

  World world = generate(spec, config.world, config.reward);
  if (agent < 0 || static_cast<std::size_t>(agent) >= world.agents().size())
    throw ConfigError("--agent out of range");
  const Policy policy = make_net_policy(l.net, l.norm, {true, false, config.threads});
  Rng rng(spec.seed);
  std::vector<Action> actions(world.agents().size());
  for (long t = 0; t < step && !world.done(); ++t) {
    policy(world, rng, actions);
    world.step(actions);
  }
  if (!world.agents()[static_cast<std::size_t>(agent)].active())
    throw RuntimeAbort("agent " + std::to_string(agent) + " is no longer active at step " +
                       std::to_string(world.step_count()));

  const Observation& obs = world.observations()[static_cast<std::size_t>(agent)];
  const PreparedObs prepared = prepare_observation(obs, *l.norm);
  std::vector<double> map_buf;
  const NetInput input = make_net_input(prepared, l.net->config(), map_buf);
  SaliencyOptions opts;
  opts.stride = config.saliency.stride;
  opts.blur_radius = config.saliency.blur_radius;
  opts.threads = config.threads;
  const SaliencyGrid grid = perturbation_saliency(*l.net, input, opts);

  fs::create_directories(config.out_dir);
  const fs::path dir = config.out_dir;
  write_saliency_pgm(grid, (dir / "saliency.pgm").string());
  write_map_pgm(obs.local_map, (dir / "map.pgm").string());
  out << "step " << world.step_count() << ", agent " << agent << ", raw max score " << format_double(grid.raw_max)
      << "; wrote " << (dir / "saliency.pgm").string() << '\n';
  return kExitOk;
}

int cmd_scenario_gen(const std::string& spec_path, const std::string& out_path, const std::string& config_path,
                     std::ostream& out) {
  const RunConfig config = config_or_default(config_path);
  const ScenarioSpec spec = load_scenario(spec_path);
  const WorldState state = generate_state(spec, config.world);
  nlohmann::json j = world_state_to_json(state);
  j["scenario"] = to_json(spec);
  save_json(j, out_path);
  out << "wrote " << state.agents.size() << " agents and " << state.obstacles.size() << " obstacles to " << out_path
      << '\n';
  return kExitOk;
}

int cmd_bench(const std::string& config_path, const std::string& scenario_path, const std::vector<int>& agents,
              int steps, const std::string& out_path, std::ostream& out) {
  const RunConfig config = config_or_default(config_path);
  const ScenarioSpec spec = load_scenario(scenario_path);
  if (steps < 1) throw ConfigError("--steps must be >= 1");
  std::string csv = "n,mean_step_ms,stddev_ms\n";
  for (int n : agents) {
    if (n < 1) throw ConfigError("--agents entries must be >= 1");
    const BenchRow row = bench_agents(config, spec, n, steps, config.seed);
    csv += std::to_string(row.n) + "," + format_double(row.mean_step_ms) + "," + format_double(row.stddev_ms) + "\n";
  }
  out << csv;
  if (!out_path.empty()) std::ofstream(out_path) << csv;
  return kExitOk;
}

}  // namespace

BenchRow bench_agents(const RunConfig& config, ScenarioSpec scenario, int n, int steps, std::uint64_t seed) {
  set_agent_count(scenario.kind, n);
  World world = generate(scenario, config.world, config.reward);
  world.set_threads(config.threads);
  auto net = std::make_shared<PolicyNetwork>(config.resolved_net());
  net->initialize(seed);
  auto norm = std::make_shared<ObsNormalizer>(net->config().scan_size());
  const Policy policy = make_net_policy(net, norm, {true, false, config.threads});
  Rng rng(seed);
  std::vector<Action> actions(world.agents().size());

  using Clock = std::chrono::steady_clock;
  std::vector<double> ms;
  for (int t = 0; t <= steps && !world.done(); ++t) {
    const auto t0 = Clock::now();
    policy(world, rng, actions);
    world.step(actions);
    const auto t1 = Clock::now();
    if (t > 0) ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  BenchRow row{n, 0.0, 0.0};
  if (ms.empty()) return row;
  for (double v : ms) row.mean_step_ms += v;
  row.mean_step_ms /= static_cast<double>(ms.size());
  for (double v : ms) row.stddev_ms += (v - row.mean_step_ms) * (v - row.mean_step_ms);
  row.stddev_ms = std::sqrt(row.stddev_ms / static_cast<double>(ms.size()));
  return row;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent map-based navigation: simulation, PPO training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, ckpt, scenario_path, out_dir, traj_path, spec_path, out_path, resume, policy_name = "net";
  std::optional<std::uint64_t> seed;
  std::optional<int> iters, stage, threads;
  std::vector<std::uint64_t> seeds;
  std::vector<int> agents{10, 20, 40, 80};
  long step = 0;
  int agent = 0, bench_steps = 20;

  auto* train = app.add_subcommand("train", "Run curriculum training");
  train->add_option("--config", config_path, "Run config (JSON)")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--iters", iters, "Iterations per stage");
  train->add_option("--stage", stage, "Run only this stage (0, 1 or 2)");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--threads", threads, "Worker cap");
  train->add_option("--resume", resume, "Start from this checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy over several seeds");
  evaluate->add_option("--ckpt", ckpt, "Checkpoint (required for --policy net)");
  evaluate->add_option("--scenario", scenario_path, "Scenario spec (JSON)")->required();
  evaluate->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',')->required();
  evaluate->add_option("--policy", policy_name, "net, straight or zero");
  evaluate->add_option("--config", config_path, "Run config (JSON)");
  evaluate->add_option("--out", out_dir, "Output directory");

  auto* replay = app.add_subcommand("replay", "Recompute metrics from a trajectory CSV");
  replay->add_option("--traj", traj_path, "Trajectory CSV")->required();
  replay->add_option("--config", config_path, "Run config (JSON)");

  auto* saliency = app.add_subcommand("saliency", "Perturbation saliency of the map input");
  saliency->add_option("--ckpt", ckpt, "Checkpoint")->required();
  saliency->add_option("--scenario", scenario_path, "Scenario spec (JSON)")->required();
  saliency->add_option("--step", step, "Simulation step to analyse");
  saliency->add_option("--agent", agent, "Agent index");
  saliency->add_option("--config", config_path, "Run config (JSON)");
  saliency->add_option("--out", out_dir, "Output directory");

  auto* gen = app.add_subcommand("scenario-gen", "Generate a scene and write it as JSON");
  gen->add_option("--spec", spec_path, "Scenario spec (JSON)")->required();
  gen->add_option("--out", out_path, "Output JSON")->required();
  gen->add_option("--config", config_path, "Run config (JSON)");

  auto* bench = app.add_subcommand("bench", "Per-step wall time against agent count");
  bench->add_option("--scenario", scenario_path, "Scenario spec (JSON)")->required();
  bench->add_option("--agents", agents, "Comma-separated agent counts")->delimiter(',');
  bench->add_option("--steps", bench_steps, "Timed steps per count");
  bench->add_option("--config", config_path, "Run config (JSON)");
  bench->add_option("--out", out_path, "Timing CSV");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train)
      return cmd_train(config_path, seed, iters, stage, out_dir, threads, resume, out);
    if (*evaluate) return cmd_evaluate(config_path, ckpt, scenario_path, seeds, policy_name, out_dir, out);
    if (*replay) return cmd_replay(traj_path, config_path, out);
    if (*saliency) return cmd_saliency(config_path, ckpt, scenario_path, step, agent, out_dir, out);
    if (*gen) return cmd_scenario_gen(spec_path, out_path, config_path, out);
    if (*bench) return cmd_bench(config_path, scenario_path, agents, bench_steps, out_path, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GenerationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    err << "runtime abort: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mapnav
