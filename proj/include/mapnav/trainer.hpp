#ifndef MAPNAV_TRAINER_HPP_
#define MAPNAV_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapnav/checkpoint.hpp"
#include "mapnav/network.hpp"
#include "mapnav/ppo.hpp"
#include "mapnav/scenarios.hpp"
#include "mapnav/world.hpp"

namespace mapnav {

/// Scene families of the curriculum. Stages 0 and 1 use the free scene with
/// agents_per_env agents; stage 2 draws uniformly from the challenge scenes.
struct TrainSettings {
  ScenarioSpec free_scene{FreeRandom{}, 0, 0.2};
  std::vector<ScenarioSpec> challenge_scenes{
      {NarrowCorridor{}, 0, 0.2}, {RandomStartsGoals{}, 0, 0.2}, {RoomEvacuation{}, 0, 0.2}};
  int checkpoint_every = 0;  // 0: only the final checkpoint of each stage
};

/// Stage 0 trains with the map branch ablated.
inline bool stage_ablates_map(int stage) { return stage == 0; }

// ---------------------------------------------------------------- checkpoints

std::vector<ShapeSpec> expected_shapes(const PolicyNetwork& net);
Checkpoint make_checkpoint(const PolicyNetwork& net, const ObsNormalizer& norm, nlohmann::json meta);
/// Throws CheckpointError listing every mismatched tensor.
void apply_checkpoint(const Checkpoint& ck, PolicyNetwork& net, ObsNormalizer& norm);

// ---------------------------------------------------------------- policies

struct NetPolicyOptions {
  bool deterministic = true;
  bool map_ablated = false;
  int threads = 1;
};

/// Evaluation policy over frozen weights and normalization statistics.
Policy make_net_policy(std::shared_ptr<const PolicyNetwork> net, std::shared_ptr<const ObsNormalizer> norm,
                       NetPolicyOptions options);

// ---------------------------------------------------------------- rollouts

struct RolloutResult {
  RolloutBuffer buffer;
  ObsNormalizer seen;  // statistics of every observation met during the episode
  std::vector<double> episode_rewards;  // per agent
  std::vector<long> episode_lengths;    // per agent, in steps
};

/// Runs one episode to completion with stochastic actions. `norm` stays
/// frozen; the caller merges `seen` afterwards.
RolloutResult collect_rollout(const PolicyNetwork& net, const ObsNormalizer& norm, World world, Rng& rng,
                              bool map_ablated, int threads = 1);

// ---------------------------------------------------------------- training loop

struct IterationLog {
  long iter = 0;
  double mean_ep_reward = 0.0;
  double mean_ep_len = 0.0;
  double clip_frac = 0.0;
  double approx_kl = 0.0;
  double loss_pi = 0.0;
  double loss_v = 0.0;
};

inline constexpr const char* kTrainLogHeader = "iter,mean_ep_reward,mean_ep_len,clip_frac,approx_kl,loss_pi,loss_v";
std::string train_log_row(const IterationLog& row);

/// Holds the learner state across iterations and stages.
class Trainer {
 public:
  Trainer(WorldConfig world, RewardParams reward, NetConfig net, PpoConfig ppo, TrainSettings settings,
          std::uint64_t seed, int threads = 1);

  PolicyNetwork& net() { return *net_; }
  const PolicyNetwork& net() const { return *net_; }
  ObsNormalizer& normalizer() { return *norm_; }
  const ObsNormalizer& normalizer() const { return *norm_; }
  const PpoConfig& ppo() const { return ppo_; }

  /// Starts a fresh optimizer, as a new stage does.
  void reset_optimizer();

  /// Collects envs_per_iter episodes of `stage` and applies one PPO update.
  IterationLog iterate(int stage, long iter);

  Checkpoint checkpoint(int stage, long iter) const;
  void restore(const Checkpoint& ck);

 private:
  ScenarioSpec scene_for(int stage, long iter, int env) const;

  WorldConfig world_;
  RewardParams reward_;
  PpoConfig ppo_;
  TrainSettings settings_;
  std::uint64_t seed_;
  int threads_;
  std::shared_ptr<PolicyNetwork> net_;
  std::shared_ptr<ObsNormalizer> norm_;
  Adam adam_;
};

struct TrainRequest {
  WorldConfig world;
  RewardParams reward;
  NetConfig net;
  PpoConfig ppo;
  TrainSettings settings;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir;
  std::vector<int> stages{0, 1, 2};
  std::optional<int> iters;  // overrides the per-stage counts
  std::optional<std::filesystem::path> init_checkpoint;
};

struct TrainReport {
  std::vector<IterationLog> log;
  std::filesystem::path final_checkpoint;
};

/// Runs the requested stages in order; each stage starts from the previous
/// one's weights. Writes train_log.csv and stage<S>_final.ckpt to out_dir.
TrainReport train(const TrainRequest& request);

}  // namespace mapnav

#endif  // MAPNAV_TRAINER_HPP_
