#include "mapnav/network.hpp"

#include <algorithm>
#include <cmath>

#include "mapnav/errors.hpp"
#include "mapnav/rng.hpp"

namespace mapnav {

std::string to_string(MapInput mode) { return mode == MapInput::Local ? "local" : "local_global"; }

MapInput parse_map_input(const std::string& text) {
  if (text == "local") return MapInput::Local;
  if (text == "local_global") return MapInput::LocalAndGlobal;
  throw ConfigError("net.map_input must be 'local' or 'local_global', got '" + text + "'");
}

void NetConfig::validate() const {
  const int dims[] = {scan_frames, scan_beams, map_cells.rows, map_cells.cols, scan_filters, scan_kernel1,
                      scan_kernel2, scan_stride, scan_fc, map_filters[0], map_filters[1], map_filters[2],
                      map_kernel, pool_kernel, pool_stride, map_fc1, map_fc2, trunk1, trunk2};
  for (int d : dims)
    if (d < 1) throw ConfigError("net: every layer dimension must be >= 1");
  if (!std::isfinite(log_std_init)) throw ConfigError("net.log_std_init must be finite");
}

NetConfig net_config_for(const WorldConfig& world, MapInput mode) {
  NetConfig c;
  c.scan_frames = world.scan_frames;
  c.scan_beams = world.scan_beams;
  c.map_cells = world.map_cells;
  c.map_input = mode;
  return c;
}

PolicyNetwork::PolicyNetwork(NetConfig config) : config_(config) {
  config_.validate();
  const NetConfig& c = config_;
  using namespace nn;

  auto c1 = Conv::conv1d("scan.conv1", c.scan_frames, c.scan_beams, c.scan_filters, c.scan_kernel1, c.scan_stride,
                         layout_);
  auto c2 = Conv::conv1d("scan.conv2", c.scan_filters, c1.out_shape().width, c.scan_filters, c.scan_kernel2,
                         c.scan_stride, layout_);
  scan_.add(c1);
  scan_.add(Relu(c1.out_shape().size()));
  scan_.add(c2);
  scan_.add(Relu(c2.out_shape().size()));
  scan_.add(Linear("scan.fc", static_cast<int>(c2.out_shape().size()), c.scan_fc, layout_));
  scan_.add(Relu(static_cast<std::size_t>(c.scan_fc)));

  const std::size_t map_begin = layout_.total();
  Shape3 shape{c.map_channels(), c.map_cells.rows, c.map_cells.cols};
  for (int i = 0; i < 3; ++i) {
    auto conv = Conv::conv2d("map.conv" + std::to_string(i + 1), shape, c.map_filters[i], c.map_kernel, 1, layout_);
    map_.add(conv);
    map_.add(Relu(conv.out_shape().size()));
    MaxPool2d pool(conv.out_shape(), c.pool_kernel, c.pool_stride);
    map_.add(pool);
    shape = pool.out_shape();
  }
  map_flatten_ = shape.size();
  map_.add(Linear("map.fc1", static_cast<int>(map_flatten_), c.map_fc1, layout_));
  map_.add(Relu(static_cast<std::size_t>(c.map_fc1)));
  map_.add(Linear("map.fc2", c.map_fc1, c.map_fc2, layout_));
  map_.add(Relu(static_cast<std::size_t>(c.map_fc2)));
  map_params_ = {map_begin, layout_.total()};

  const int trunk_in = c.scan_fc + c.map_fc2 + 4;
  trunk_.add(Linear("trunk.fc1", trunk_in, c.trunk1, layout_));
  trunk_.add(Relu(static_cast<std::size_t>(c.trunk1)));
  trunk_.add(Linear("trunk.fc2", c.trunk1, c.trunk2, layout_));
  trunk_.add(Relu(static_cast<std::size_t>(c.trunk2)));
  mean_head_.add(Linear("policy.mean", c.trunk2, 2, layout_));
  value_head_.add(Linear("value", c.trunk2, 1, layout_));
  log_std_off_ = layout_.add("policy.log_std", {2});

  params_.assign(layout_.total(), 0.0);
}

namespace {

// Fills a rows x cols block with a (semi-)orthogonal matrix scaled by gain.
void orthogonal(std::span<double> out, int rows, int cols, double gain, Rng& rng) {
  const int tall = std::max(rows, cols);
  const int narrow = std::min(rows, cols);
  // `narrow` orthonormal vectors of length `tall` via modified Gram-Schmidt.
  std::vector<double> q(static_cast<std::size_t>(narrow) * tall);
  for (double& v : q) v = rng.normal();
  for (int i = 0; i < narrow; ++i) {
    double* vi = q.data() + static_cast<std::size_t>(i) * tall;
    for (int j = 0; j < i; ++j) {
      const double* vj = q.data() + static_cast<std::size_t>(j) * tall;
      double d = 0.0;
      for (int k = 0; k < tall; ++k) d += vi[k] * vj[k];
      for (int k = 0; k < tall; ++k) vi[k] -= d * vj[k];
    }
    double norm = 0.0;
    for (int k = 0; k < tall; ++k) norm += vi[k] * vi[k];
    norm = std::sqrt(norm);
    for (int k = 0; k < tall; ++k) vi[k] /= norm;
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = rows <= cols ? q[static_cast<std::size_t>(r) * tall + c] : q[static_cast<std::size_t>(c) * tall + r];
      out[static_cast<std::size_t>(r) * cols + c] = gain * v;
    }
  }
}

}  // namespace

void PolicyNetwork::initialize(std::uint64_t seed) {
  Rng rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  for (const nn::ParamBlock& b : layout_.blocks()) {
    if (b.name.ends_with(".bias")) continue;
    std::span<double> block(params_.data() + b.offset, b.size);
    if (b.name == "policy.log_std") {
      std::fill(block.begin(), block.end(), config_.log_std_init);
      continue;
    }
    const int rows = b.shape.front();
    const int cols = static_cast<int>(b.size / static_cast<std::size_t>(rows));
    double gain = std::sqrt(2.0);
    if (b.name == "policy.mean.weight") gain = 0.01;
    if (b.name == "value.weight") gain = 1.0;
    orthogonal(block, rows, cols, gain, rng);
  }
}

void PolicyNetwork::check_input(const NetInput& in) const {
  auto check = [](std::size_t got, std::size_t want, const char* what) {
    if (got != want)
      throw InputError(std::string("network input '") + what + "': expected " + std::to_string(want) +
                       " values, got " + std::to_string(got));
  };
  check(in.scan.size(), config_.scan_size(), "scan");
  check(in.goal.size(), 2, "goal");
  check(in.velocity.size(), 2, "velocity");
  check(in.map.size(), config_.map_size(), "map");
}

NetOutput PolicyNetwork::forward(const NetInput& input, ForwardCache& cache, bool map_ablated) const {
  check_input(input);
  cache.valid = false;
  const std::span<const double> scan_feat = scan_.forward(params_, input.scan, cache.scan);

  std::vector<double> trunk_in;
  trunk_in.reserve(trunk_.input_size());
  trunk_in.insert(trunk_in.end(), scan_feat.begin(), scan_feat.end());
  if (map_ablated) {
    cache.map.valid = false;
    trunk_in.resize(trunk_in.size() + static_cast<std::size_t>(config_.map_fc2), 0.0);
  } else {
    const std::span<const double> map_feat = map_.forward(params_, input.map, cache.map);
    trunk_in.insert(trunk_in.end(), map_feat.begin(), map_feat.end());
  }
  trunk_in.insert(trunk_in.end(), input.goal.begin(), input.goal.end());
  trunk_in.insert(trunk_in.end(), input.velocity.begin(), input.velocity.end());

  const std::span<const double> hidden = trunk_.forward(params_, trunk_in, cache.trunk);
  const std::span<const double> mean = mean_head_.forward(params_, hidden, cache.mean_head);
  const std::span<const double> value = value_head_.forward(params_, hidden, cache.value_head);

  NetOutput out;
  out.mean = {mean[0], mean[1]};
  out.log_std = {params_[log_std_off_], params_[log_std_off_ + 1]};
  out.value = value[0];
  cache.map_ablated = map_ablated;
  cache.valid = true;
  return out;
}

NetOutput PolicyNetwork::forward(const NetInput& input, bool map_ablated) const {
  ForwardCache cache;
  return forward(input, cache, map_ablated);
}

void PolicyNetwork::backward(const ForwardCache& cache, const OutputGrad& grad, std::span<double> grads) const {
  if (!cache.valid) throw StateError("backward called before forward");
  if (grads.size() != params_.size()) throw InputError("backward: gradient buffer has the wrong size");

  grads[log_std_off_] += grad.log_std[0];
  grads[log_std_off_ + 1] += grad.log_std[1];

  const std::size_t hidden = static_cast<std::size_t>(config_.trunk2);
  std::vector<double> d_hidden(hidden, 0.0);
  std::vector<double> tmp(hidden, 0.0);
  const double d_mean[2] = {grad.mean[0], grad.mean[1]};
  mean_head_.backward(params_, cache.mean_head, d_mean, tmp, grads);
  for (std::size_t i = 0; i < hidden; ++i) d_hidden[i] += tmp[i];
  const double d_value[1] = {grad.value};
  value_head_.backward(params_, cache.value_head, d_value, tmp, grads);
  for (std::size_t i = 0; i < hidden; ++i) d_hidden[i] += tmp[i];

  std::vector<double> d_trunk_in(trunk_.input_size(), 0.0);
  trunk_.backward(params_, cache.trunk, d_hidden, d_trunk_in, grads);

  const std::size_t scan_n = static_cast<std::size_t>(config_.scan_fc);
  const std::size_t map_n = static_cast<std::size_t>(config_.map_fc2);
  scan_.backward(params_, cache.scan, std::span<const double>(d_trunk_in.data(), scan_n), {}, grads);
  if (!cache.map_ablated)
    map_.backward(params_, cache.map, std::span<const double>(d_trunk_in.data() + scan_n, map_n), {}, grads);
}

std::vector<nn::Shape3> PolicyNetwork::map_shape_chain() const {
  std::vector<nn::Shape3> chain;
  for (const nn::Layer& l : map_.layers()) {
    if (const auto* conv = std::get_if<nn::Conv>(&l)) chain.push_back(conv->out_shape());
    if (const auto* pool = std::get_if<nn::MaxPool2d>(&l)) chain.push_back(pool->out_shape());
  }
  return chain;
}

}  // namespace mapnav
