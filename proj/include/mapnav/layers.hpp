#ifndef MAPNAV_LAYERS_HPP_
#define MAPNAV_LAYERS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mapnav::nn {

/// Channel-major activation shape. 1D signals use height 1.
struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
  bool operator==(const Shape3&) const = default;
};

struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Named slices of one flat parameter vector.
class ParamLayout {
 public:
  std::size_t add(std::string name, std::vector<int> shape);
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& find(const std::string& name) const;
  std::size_t total() const { return total_; }

 private:
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
};

/// TensorFlow "SAME" output length: ceil(in / stride).
int same_output_size(int in, int stride);
/// Leading pad of a SAME window: half of the total, rounded down.
int same_pad_before(int in, int kernel, int stride);

/// Cross-correlation with SAME zero padding. Weights are laid out
/// [out][in][kh][kw], one bias per output channel.
class Conv {
 public:
  static Conv conv2d(const std::string& name, Shape3 in, int out_channels, int kernel, int stride,
                     ParamLayout& layout);
  /// 1D convolution over a (channels x length) signal.
  static Conv conv1d(const std::string& name, int in_channels, int length, int out_channels, int kernel,
                     int stride, ParamLayout& layout);

  Shape3 in_shape() const { return in_; }
  Shape3 out_shape() const { return out_; }
  std::size_t weight_offset() const { return w_off_; }
  std::size_t bias_offset() const { return b_off_; }
  int kernel_h() const { return kh_; }
  int kernel_w() const { return kw_; }

  void forward(std::span<const double> params, std::span<const double> x, std::span<double> y) const;
  /// Accumulates into `grads`; `dx` may be empty when the input gradient is
  /// not needed, otherwise it is overwritten.
  void backward(std::span<const double> params, std::span<const double> x, std::span<const double> dy,
                std::span<double> dx, std::span<double> grads) const;

 private:
  Shape3 in_{}, out_{};
  int kh_ = 1, kw_ = 1, sh_ = 1, sw_ = 1, ph_ = 0, pw_ = 0;
  std::size_t w_off_ = 0, b_off_ = 0;
};

/// Max pooling with SAME padding; padded positions never win.
class MaxPool2d {
 public:
  MaxPool2d(Shape3 in, int kernel, int stride);

  Shape3 in_shape() const { return in_; }
  Shape3 out_shape() const { return out_; }

  /// `argmax` receives the input index chosen for every output element.
  void forward(std::span<const double> x, std::span<double> y, std::span<int> argmax) const;
  void backward(std::span<const int> argmax, std::span<const double> dy, std::span<double> dx) const;

 private:
  Shape3 in_{}, out_{};
  int k_ = 1, s_ = 1, ph_ = 0, pw_ = 0;
};

/// y = W x + b with W laid out [out][in].
class Linear {
 public:
  Linear(const std::string& name, int in, int out, ParamLayout& layout);

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  std::size_t weight_offset() const { return w_off_; }
  std::size_t bias_offset() const { return b_off_; }

  void forward(std::span<const double> params, std::span<const double> x, std::span<double> y) const;
  void backward(std::span<const double> params, std::span<const double> x, std::span<const double> dy,
                std::span<double> dx, std::span<double> grads) const;

 private:
  int in_ = 0, out_ = 0;
  std::size_t w_off_ = 0, b_off_ = 0;
};

class Relu {
 public:
  explicit Relu(std::size_t size) : size_(size) {}
  std::size_t size() const { return size_; }
  void forward(std::span<const double> x, std::span<double> y) const;
  /// Uses the forward output: the gradient passes where y > 0.
  void backward(std::span<const double> y, std::span<const double> dy, std::span<double> dx) const;

 private:
  std::size_t size_;
};

using Layer = std::variant<Conv, MaxPool2d, Linear, Relu>;

std::size_t layer_input_size(const Layer& layer);
std::size_t layer_output_size(const Layer& layer);

/// Activations kept from a forward pass: acts[0] is the input, acts[i + 1]
/// the output of layer i.
struct SequentialCache {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<int>> argmax;
  bool valid = false;
};

class Sequential {
 public:
  Sequential() = default;
  void add(Layer layer);

  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t input_size() const;
  std::size_t output_size() const;

  /// Returns a view of the last activation inside `cache`.
  std::span<const double> forward(std::span<const double> params, std::span<const double> x,
                                  SequentialCache& cache) const;
  void backward(std::span<const double> params, const SequentialCache& cache, std::span<const double> dy,
                std::span<double> dx, std::span<double> grads) const;

 private:
  std::vector<Layer> layers_;
};

}  // namespace mapnav::nn

#endif  // MAPNAV_LAYERS_HPP_
