#ifndef MAPNAV_PPO_HPP_
#define MAPNAV_PPO_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mapnav/gaussian.hpp"
#include "mapnav/infomap.hpp"
#include "mapnav/network.hpp"
#include "mapnav/rng.hpp"

namespace mapnav {

struct Observation;

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  int epochs_per_update = 4;
  int minibatch_size = 512;
  double learning_rate = 5e-5;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;  // 0 disables clipping
  int stage0_iters = 100;
  int stage1_iters = 100;
  int stage2_iters = 100;
  int agents_per_env = 20;
  int envs_per_iter = 1;

  void validate() const;
  bool operator==(const PpoConfig&) const = default;
};

// ---------------------------------------------------------------- GAE

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Backward recursion over a flat sequence that may hold several episodes;
/// terminals[t] cuts bootstrapping after step t. `last_value` bootstraps a
/// trailing non-terminal step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const bool> terminals, double gamma, double lambda, double last_value = 0.0);

// ---------------------------------------------------------------- normalization

/// Welford running mean and population variance per component.
class RunningStat {
 public:
  RunningStat() = default;
  explicit RunningStat(std::size_t dims) : mean_(dims, 0.0), m2_(dims, 0.0) {}

  std::size_t dims() const { return mean_.size(); }
  double count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;
  const std::vector<double>& m2() const { return m2_; }

  void update(std::span<const double> x);
  /// Parallel-merge (Chan et al.) of another accumulator over the same dims.
  void merge(const RunningStat& other);
  /// (x - mean) / max(std, 1e-8), clipped to [-10, 10]. Identity-with-clip
  /// before the first sample.
  void normalize(std::span<const double> x, std::span<double> out) const;

  void restore(double count, std::vector<double> mean, std::vector<double> m2);

 private:
  double count_ = 0.0;
  std::vector<double> mean_, m2_;
};

inline constexpr double kNormClip = 10.0;

/// Statistics for the scan, goal and velocity channels. The map is
/// categorical and never normalized.
struct ObsNormalizer {
  RunningStat scan, goal, velocity;

  ObsNormalizer() = default;
  explicit ObsNormalizer(std::size_t scan_size) : scan(scan_size), goal(2), velocity(2) {}

  void update(const Observation& obs);
  void merge(const ObsNormalizer& other);
};

/// One observation ready for the network: normalized vectors plus the sparse maps.
struct PreparedObs {
  std::vector<double> scan;
  std::array<double, 2> goal{};
  std::array<double, 2> velocity{};
  InfoMap local_map;
  InfoMap global_map;
};

PreparedObs prepare_observation(const Observation& obs, const ObsNormalizer& norm);

/// Densifies the map channel(s) into `map_buffer` and returns a view over all inputs.
NetInput make_net_input(const PreparedObs& obs, const NetConfig& net, std::vector<double>& map_buffer);

// ---------------------------------------------------------------- rollouts

struct Transition {
  PreparedObs obs;
  Pre pre_action{};  // pre-squash sample
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool terminal = false;
  double advantage = 0.0;
  double ret = 0.0;
};

/// Transitions grouped as contiguous per-agent episode segments, each ending
/// in a terminal step.
struct RolloutBuffer {
  std::vector<Transition> transitions;
  bool map_ablated = false;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  void clear() { transitions.clear(); }
  void append(RolloutBuffer&& other);

  /// Fills advantage and ret with GAE.
  void compute_advantages(double gamma, double lambda);
  /// Shifts and scales advantages to zero mean and unit variance.
  void normalize_advantages();
};

// ---------------------------------------------------------------- optimizer

struct Adam {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<double> m, v;

  void step(std::span<double> params, std::span<const double> grads);
};

// ---------------------------------------------------------------- update

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
  double approx_kl = 0.0;
};

/// Mean PPO loss over `indices` using the stored (already normalized)
/// advantages. Writes d(total)/d(params) into `grads` unless it is empty.
/// Per-sample gradients are summed in fixed contiguous chunks so the result
/// does not depend on `threads`.
PpoLoss ppo_loss(const PolicyNetwork& net, const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                 const PpoConfig& config, std::span<double> grads, int threads = 1);

struct UpdateStats {
  double loss_pi = 0.0;
  double loss_v = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
  double approx_kl = 0.0;
  int minibatches = 0;
  bool aborted = false;  // non-finite loss; parameters and optimizer restored
};

/// Recomputes and normalizes advantages, then runs the configured epochs of
/// shuffled minibatch steps. Clears the buffer on return.
UpdateStats ppo_update(PolicyNetwork& net, RolloutBuffer& buffer, const PpoConfig& config, Adam& adam, Rng& rng,
                       int threads = 1);

}  // namespace mapnav

#endif  // MAPNAV_PPO_HPP_
