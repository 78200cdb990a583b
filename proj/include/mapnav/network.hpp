#ifndef MAPNAV_NETWORK_HPP_
#define MAPNAV_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mapnav/layers.hpp"
#include "mapnav/world_state.hpp"

namespace mapnav {

/// Which maps feed the CNN: the agent-centered map alone, or the local and
/// global maps stacked as two channels.
enum class MapInput { Local, LocalAndGlobal };

std::string to_string(MapInput mode);
MapInput parse_map_input(const std::string& text);

struct NetConfig {
  int scan_frames = 3;
  int scan_beams = 512;
  GridSize map_cells{250, 250};
  MapInput map_input = MapInput::Local;

  // Scan branch: two strided 1D convolutions and a dense layer.
  int scan_filters = 32;
  int scan_kernel1 = 5;
  int scan_kernel2 = 3;
  int scan_stride = 2;
  int scan_fc = 256;

  // Map branch: three conv + max-pool stages and two dense layers.
  std::array<int, 3> map_filters{8, 12, 20};
  int map_kernel = 7;
  int pool_kernel = 3;
  int pool_stride = 2;
  int map_fc1 = 128;
  int map_fc2 = 64;

  int trunk1 = 384;
  int trunk2 = 256;
  double log_std_init = -0.5;

  int map_channels() const { return map_input == MapInput::Local ? 1 : 2; }
  std::size_t scan_size() const { return static_cast<std::size_t>(scan_frames) * scan_beams; }
  std::size_t map_size() const {
    return static_cast<std::size_t>(map_channels()) * map_cells.rows * map_cells.cols;
  }
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

/// Sensor and map dimensions taken from the world, architecture defaults
/// for everything else.
NetConfig net_config_for(const WorldConfig& world, MapInput mode = MapInput::Local);

struct NetInput {
  std::span<const double> scan;      // frames x beams
  std::span<const double> goal;      // 2
  std::span<const double> velocity;  // 2
  std::span<const double> map;       // channels x rows x cols
};

struct NetOutput {
  std::array<double, 2> mean{};  // pre-squash
  std::array<double, 2> log_std{};
  double value = 0.0;
};

struct OutputGrad {
  std::array<double, 2> mean{};
  std::array<double, 2> log_std{};
  double value = 0.0;
};

struct ForwardCache {
  nn::SequentialCache scan;
  nn::SequentialCache map;
  nn::SequentialCache trunk;
  nn::SequentialCache mean_head;
  nn::SequentialCache value_head;
  bool map_ablated = false;
  bool valid = false;
};

/// Policy/value network: 1D-conv scan branch, CNN map branch, dense trunk,
/// Gaussian mean head with free log-std, scalar value head. Parameters live in
/// one flat vector so optimizers and checkpoints treat them uniformly.
class PolicyNetwork {
 public:
  explicit PolicyNetwork(NetConfig config);

  const NetConfig& config() const { return config_; }
  const nn::ParamLayout& layout() const { return layout_; }
  std::size_t parameter_count() const { return layout_.total(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Orthogonal weights (gain sqrt 2 in hidden layers, 0.01 on the policy
  /// mean, 1 on the value head), zero biases, constant log-std.
  void initialize(std::uint64_t seed);

  /// With `map_ablated` the map branch is skipped and its feature is zero.
  NetOutput forward(const NetInput& input, ForwardCache& cache, bool map_ablated = false) const;
  NetOutput forward(const NetInput& input, bool map_ablated = false) const;

  /// Accumulates d(loss)/d(params) into `grads`. Throws StateError if the
  /// cache holds no forward pass.
  void backward(const ForwardCache& cache, const OutputGrad& grad, std::span<double> grads) const;

  const nn::Sequential& scan_branch() const { return scan_; }
  const nn::Sequential& map_branch() const { return map_; }
  const nn::Sequential& trunk() const { return trunk_; }

  /// Output shape of every map-branch conv and pool layer, then the flatten size.
  std::vector<nn::Shape3> map_shape_chain() const;
  std::size_t map_flatten_size() const { return map_flatten_; }

  /// Indices into params() that belong to the map branch.
  std::pair<std::size_t, std::size_t> map_param_range() const { return map_params_; }

 private:
  void check_input(const NetInput& input) const;

  NetConfig config_;
  nn::ParamLayout layout_;
  nn::Sequential scan_, map_, trunk_, mean_head_, value_head_;
  std::size_t log_std_off_ = 0;
  std::size_t map_flatten_ = 0;
  std::pair<std::size_t, std::size_t> map_params_{0, 0};
  std::vector<double> params_;
};

}  // namespace mapnav

#endif  // MAPNAV_NETWORK_HPP_
