#include "mapnav/trainer.hpp"

#include <fstream>

#include "mapnav/config.hpp"
#include "mapnav/errors.hpp"
#include "mapnav/parallel.hpp"

namespace mapnav {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- checkpoints

namespace {

const std::pair<const char*, RunningStat ObsNormalizer::*> kNormParts[] = {
    {"scan", &ObsNormalizer::scan}, {"goal", &ObsNormalizer::goal}, {"velocity", &ObsNormalizer::velocity}};

std::size_t norm_dims(const PolicyNetwork& net, const std::string& part) {
  return part == "scan" ? net.config().scan_size() : 2;
}

}  // namespace

std::vector<ShapeSpec> expected_shapes(const PolicyNetwork& net) {
  std::vector<ShapeSpec> specs;
  for (const nn::ParamBlock& b : net.layout().blocks()) specs.push_back({"net." + b.name, b.shape});
  specs.push_back({"norm.count", {1}});
  for (const auto& [part, member] : kNormParts) {
    const int n = static_cast<int>(norm_dims(net, part));
    specs.push_back({std::string("norm.") + part + ".mean", {n}});
    specs.push_back({std::string("norm.") + part + ".m2", {n}});
  }
  return specs;
}

Checkpoint make_checkpoint(const PolicyNetwork& net, const ObsNormalizer& norm, nlohmann::json meta) {
  Checkpoint ck;
  ck.meta = std::move(meta);
  const std::vector<double>& p = net.params();
  for (const nn::ParamBlock& b : net.layout().blocks())
    ck.add("net." + b.name, b.shape,
           std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(b.offset),
                               p.begin() + static_cast<std::ptrdiff_t>(b.offset + b.size)));
  ck.add("norm.count", {1}, {norm.scan.count()});
  for (const auto& [part, member] : kNormParts) {
    const RunningStat& s = norm.*member;
    std::vector<double> mean = s.mean(), m2 = s.m2();
    const std::size_t n = norm_dims(net, part);
    mean.resize(n, 0.0);
    m2.resize(n, 0.0);
    const int dim = static_cast<int>(n);
    ck.add(std::string("norm.") + part + ".mean", {dim}, std::move(mean));
    ck.add(std::string("norm.") + part + ".m2", {dim}, std::move(m2));
  }
  return ck;
}

void apply_checkpoint(const Checkpoint& ck, PolicyNetwork& net, ObsNormalizer& norm) {
  check_shapes(ck, expected_shapes(net));
  std::vector<double>& p = net.params();
  for (const nn::ParamBlock& b : net.layout().blocks()) {
    const Tensor* t = ck.find("net." + b.name);
    std::copy(t->data.begin(), t->data.end(), p.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  const double count = ck.find("norm.count")->data[0];
  for (const auto& [part, member] : kNormParts)
    (norm.*member).restore(count, ck.find(std::string("norm.") + part + ".mean")->data,
                           ck.find(std::string("norm.") + part + ".m2")->data);
}

// ---------------------------------------------------------------- policies

namespace {

struct AgentEval {
  PreparedObs obs;
  NetOutput out;
};

std::vector<std::size_t> active_agents(const World& world) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < world.agents().size(); ++i)
    if (world.agents()[i].active()) ids.push_back(i);
  return ids;
}

std::vector<AgentEval> evaluate_agents(const PolicyNetwork& net, const ObsNormalizer& norm, const World& world,
                                       const std::vector<std::size_t>& ids, bool map_ablated, int threads) {
  std::vector<AgentEval> evals(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t k) {
    AgentEval& e = evals[k];
    e.obs = prepare_observation(world.observations()[ids[k]], norm);
    std::vector<double> map_buf;
    e.out = net.forward(make_net_input(e.obs, net.config(), map_buf), map_ablated);
  });
  return evals;
}

}  // namespace

Policy make_net_policy(std::shared_ptr<const PolicyNetwork> net, std::shared_ptr<const ObsNormalizer> norm,
                       NetPolicyOptions options) {
  return [net, norm, options](const World& world, Rng& rng, std::span<Action> actions) {
    const std::vector<std::size_t> ids = active_agents(world);
    const std::vector<AgentEval> evals =
        evaluate_agents(*net, *norm, world, ids, options.map_ablated, options.threads);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const NetOutput& o = evals[k].out;
      actions[ids[k]] = options.deterministic ? deterministic_action(o.mean) : squash(sample_pre(o.mean, o.log_std, rng));
    }
  };
}

// ---------------------------------------------------------------- rollouts

RolloutResult collect_rollout(const PolicyNetwork& net, const ObsNormalizer& norm, World world, Rng& rng,
                              bool map_ablated, int threads) {
  const std::size_t n = world.agents().size();
  RolloutResult result;
  result.seen = ObsNormalizer(net.config().scan_size());
  result.episode_rewards.assign(n, 0.0);
  result.episode_lengths.assign(n, 0);
  result.buffer.map_ablated = map_ablated;
  std::vector<std::vector<Transition>> per_agent(n);
  std::vector<Action> actions(n);

  const long max_steps = static_cast<long>(std::ceil(world.time_limit_s() / world.config().dt_s)) + 2;
  while (!world.done()) {
    if (world.step_count() > max_steps) throw RuntimeAbort("rollout exceeded its step budget");
    const std::vector<std::size_t> ids = active_agents(world);
    std::vector<AgentEval> evals = evaluate_agents(net, norm, world, ids, map_ablated, threads);

    for (std::size_t k = 0; k < ids.size(); ++k) {
      result.seen.update(world.observations()[ids[k]]);
      const NetOutput& o = evals[k].out;
      const Pre u = sample_pre(o.mean, o.log_std, rng);
      Transition t;
      t.pre_action = u;
      t.log_prob = action_log_prob(u, o.mean, o.log_std);
      t.value = o.value;
      t.obs = std::move(evals[k].obs);
      actions[ids[k]] = squash(u);
      per_agent[ids[k]].push_back(std::move(t));
    }

    const StepReport report = world.step(actions);
    for (std::size_t id : ids) {
      Transition& t = per_agent[id].back();
      t.reward = report.rewards[id];
      t.terminal = report.terminal[id];
      result.episode_rewards[id] += t.reward;
      ++result.episode_lengths[id];
    }
  }
  for (std::vector<Transition>& seq : per_agent)
    for (Transition& t : seq) result.buffer.transitions.push_back(std::move(t));
  return result;
}

// ---------------------------------------------------------------- trainer

std::string train_log_row(const IterationLog& r) {
  return std::to_string(r.iter) + "," + format_double(r.mean_ep_reward) + "," + format_double(r.mean_ep_len) + "," +
         format_double(r.clip_frac) + "," + format_double(r.approx_kl) + "," + format_double(r.loss_pi) + "," +
         format_double(r.loss_v);
}

Trainer::Trainer(WorldConfig world, RewardParams reward, NetConfig net, PpoConfig ppo, TrainSettings settings,
                 std::uint64_t seed, int threads)
    : world_(world), reward_(reward), ppo_(ppo), settings_(std::move(settings)), seed_(seed),
      threads_(std::max(threads, 1)) {
  world_.validate();
  reward_.validate();
  ppo_.validate();
  if (settings_.challenge_scenes.empty()) throw ConfigError("train.challenge_scenes must not be empty");
  net.scan_frames = world_.scan_frames;
  net.scan_beams = world_.scan_beams;
  net.map_cells = world_.map_cells;
  net_ = std::make_shared<PolicyNetwork>(net);
  net_->initialize(mix_seed(seed_, 0x6e6574));
  norm_ = std::make_shared<ObsNormalizer>(net_->config().scan_size());
  reset_optimizer();
}

void Trainer::reset_optimizer() {
  adam_ = Adam{};
  adam_.lr = ppo_.learning_rate;
}

ScenarioSpec Trainer::scene_for(int stage, long iter, int env) const {
  const std::uint64_t s = mix_seed(mix_seed(mix_seed(seed_, static_cast<std::uint64_t>(stage) + 1),
                                            static_cast<std::uint64_t>(iter)),
                                   static_cast<std::uint64_t>(env));
  ScenarioSpec spec;
  if (stage == 2) {
    Rng pick(s);
    spec = settings_.challenge_scenes[pick.index(settings_.challenge_scenes.size())];
  } else {
    spec = settings_.free_scene;
    set_agent_count(spec.kind, ppo_.agents_per_env);
  }
  spec.seed = s;
  return spec;
}

IterationLog Trainer::iterate(int stage, long iter) {
  if (stage < 0 || stage > 2) throw ConfigError("stage must be 0, 1 or 2");
  const bool ablated = stage_ablates_map(stage);
  const int envs = ppo_.envs_per_iter;

  std::vector<World> worlds;
  worlds.reserve(static_cast<std::size_t>(envs));
  for (int e = 0; e < envs; ++e) worlds.push_back(generate(scene_for(stage, iter, e), world_, reward_));
  // Seed the statistics from the very first starting observations.
  if (norm_->scan.count() == 0.0)
    for (const World& w : worlds)
      for (const Observation& o : w.observations()) norm_->update(o);

  std::vector<RolloutResult> results(static_cast<std::size_t>(envs));
  const int inner = envs == 1 ? threads_ : 1;
  parallel_for(static_cast<std::size_t>(envs), threads_, [&](std::size_t e) {
    Rng rng(mix_seed(scene_for(stage, iter, static_cast<int>(e)).seed, 0x726f6c6c));
    results[e] = collect_rollout(*net_, *norm_, std::move(worlds[e]), rng, ablated, inner);
  });

  RolloutBuffer buffer;
  buffer.map_ablated = ablated;
  IterationLog log;
  log.iter = iter;
  double episodes = 0.0;
  for (RolloutResult& r : results) {
    for (std::size_t i = 0; i < r.episode_rewards.size(); ++i) {
      log.mean_ep_reward += r.episode_rewards[i];
      log.mean_ep_len += static_cast<double>(r.episode_lengths[i]);
      episodes += 1.0;
    }
    buffer.append(std::move(r.buffer));
  }
  log.mean_ep_reward /= episodes;
  log.mean_ep_len /= episodes;

  Rng update_rng(mix_seed(mix_seed(seed_, 0x757064), static_cast<std::uint64_t>(iter)));
  const UpdateStats stats = ppo_update(*net_, buffer, ppo_, adam_, update_rng, threads_);
  // Statistics change only after the update so rollout and update saw the same inputs.
  for (const RolloutResult& r : results) norm_->merge(r.seen);

  log.clip_frac = stats.clip_frac;
  log.approx_kl = stats.approx_kl;
  log.loss_pi = stats.loss_pi;
  log.loss_v = stats.loss_v;
  if (stats.aborted) log.loss_pi = log.loss_v = std::numeric_limits<double>::quiet_NaN();
  return log;
}

Checkpoint Trainer::checkpoint(int stage, long iter) const {
  const NetConfig& c = net_->config();
  nlohmann::json meta = {{"stage", stage},
                         {"iteration", iter},
                         {"seed", seed_},
                         {"net", to_json(c)},
                         {"scan_frames", c.scan_frames},
                         {"scan_beams", c.scan_beams},
                         {"map_cells", {c.map_cells.rows, c.map_cells.cols}}};
  return make_checkpoint(*net_, *norm_, std::move(meta));
}

void Trainer::restore(const Checkpoint& ck) { apply_checkpoint(ck, *net_, *norm_); }

TrainReport train(const TrainRequest& req) {
  for (int s : req.stages)
    if (s < 0 || s > 2) throw ConfigError("stage must be 0, 1 or 2, got " + std::to_string(s));
  if (req.iters && *req.iters < 0) throw ConfigError("iters must be >= 0");

  Trainer trainer(req.world, req.reward, req.net, req.ppo, req.settings, req.seed, req.threads);
  if (req.init_checkpoint) trainer.restore(load_checkpoint(*req.init_checkpoint));

  fs::create_directories(req.out_dir);
  std::ofstream log_file(req.out_dir / "train_log.csv");
  if (!log_file) throw ConfigError("cannot write " + (req.out_dir / "train_log.csv").string());
  log_file << kTrainLogHeader << '\n';

  TrainReport report;
  long global_iter = 0;
  for (int stage : req.stages) {
    const int stage_iters[] = {req.ppo.stage0_iters, req.ppo.stage1_iters, req.ppo.stage2_iters};
    const int iters = req.iters.value_or(stage_iters[stage]);
    trainer.reset_optimizer();
    for (int i = 0; i < iters; ++i, ++global_iter) {
      const IterationLog row = trainer.iterate(stage, global_iter);
      report.log.push_back(row);
      log_file << train_log_row(row) << '\n' << std::flush;
      if (req.settings.checkpoint_every > 0 && (i + 1) % req.settings.checkpoint_every == 0)
        save_checkpoint(trainer.checkpoint(stage, global_iter + 1),
                        req.out_dir / ("stage" + std::to_string(stage) + "_iter" + std::to_string(i + 1) + ".ckpt"));
    }
    report.final_checkpoint = req.out_dir / ("stage" + std::to_string(stage) + "_final.ckpt");
    save_checkpoint(trainer.checkpoint(stage, global_iter), report.final_checkpoint);
  }
  return report;
}

}  // namespace mapnav
