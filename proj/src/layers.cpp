#include "mapnav/layers.hpp"

#include <algorithm>
#include <limits>

#include "mapnav/errors.hpp"

namespace mapnav::nn {

std::size_t ParamLayout::add(std::string name, std::vector<int> shape) {
  std::size_t size = 1;
  for (int d : shape) size *= static_cast<std::size_t>(d);
  const std::size_t offset = total_;
  blocks_.push_back({std::move(name), std::move(shape), offset, size});
  total_ += size;
  return offset;
}

const ParamBlock& ParamLayout::find(const std::string& name) const {
  for (const ParamBlock& b : blocks_)
    if (b.name == name) return b;
  throw InputError("no parameter block named '" + name + "'");
}

int same_output_size(int in, int stride) { return (in + stride - 1) / stride; }

int same_pad_before(int in, int kernel, int stride) {
  const int out = same_output_size(in, stride);
  const int total = std::max((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

namespace {

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InputError(std::string(what) + ": expected " + std::to_string(want) + " values, got " +
                     std::to_string(got));
}

// Output columns whose tap (ox * stride + k - pad) falls inside [0, in).
std::pair<int, int> valid_range(int k, int pad, int stride, int in, int out) {
  const int lead = pad - k;
  const int first = lead <= 0 ? 0 : (lead + stride - 1) / stride;
  const int reach = in - 1 - k + pad;
  if (reach < 0) return {0, -1};
  return {first, std::min(out - 1, reach / stride)};
}

}  // namespace

Conv Conv::conv2d(const std::string& name, Shape3 in, int out_channels, int kernel, int stride,
                  ParamLayout& layout) {
  if (in.channels < 1 || in.height < 1 || in.width < 1 || out_channels < 1 || kernel < 1 || stride < 1)
    throw InputError("conv2d '" + name + "': invalid shape");
  Conv c;
  c.in_ = in;
  c.kh_ = c.kw_ = kernel;
  c.sh_ = c.sw_ = stride;
  c.out_ = {out_channels, same_output_size(in.height, stride), same_output_size(in.width, stride)};
  c.ph_ = same_pad_before(in.height, kernel, stride);
  c.pw_ = same_pad_before(in.width, kernel, stride);
  c.w_off_ = layout.add(name + ".weight", {out_channels, in.channels, kernel, kernel});
  c.b_off_ = layout.add(name + ".bias", {out_channels});
  return c;
}

Conv Conv::conv1d(const std::string& name, int in_channels, int length, int out_channels, int kernel, int stride,
                  ParamLayout& layout) {
  if (in_channels < 1 || length < 1 || out_channels < 1 || kernel < 1 || stride < 1)
    throw InputError("conv1d '" + name + "': invalid shape");
  Conv c;
  c.in_ = {in_channels, 1, length};
  c.kh_ = 1;
  c.kw_ = kernel;
  c.sh_ = 1;
  c.sw_ = stride;
  c.out_ = {out_channels, 1, same_output_size(length, stride)};
  c.ph_ = 0;
  c.pw_ = same_pad_before(length, kernel, stride);
  c.w_off_ = layout.add(name + ".weight", {out_channels, in_channels, kernel});
  c.b_off_ = layout.add(name + ".bias", {out_channels});
  return c;
}

void Conv::forward(std::span<const double> params, std::span<const double> x, std::span<double> y) const {
  expect_size(x.size(), in_.size(), "conv input");
  expect_size(y.size(), out_.size(), "conv output");
  const std::size_t in_plane = static_cast<std::size_t>(in_.height) * in_.width;
  const std::size_t out_plane = static_cast<std::size_t>(out_.height) * out_.width;
  const double* W = params.data() + w_off_;
  const double* B = params.data() + b_off_;
  for (int oc = 0; oc < out_.channels; ++oc) {
    double* yc = y.data() + oc * out_plane;
    std::fill(yc, yc + out_plane, B[oc]);
    for (int ic = 0; ic < in_.channels; ++ic) {
      const double* xc = x.data() + ic * in_plane;
      for (int ky = 0; ky < kh_; ++ky) {
        for (int kx = 0; kx < kw_; ++kx) {
          const double w = W[((static_cast<std::size_t>(oc) * in_.channels + ic) * kh_ + ky) * kw_ + kx];
          const auto [ox0, ox1] = valid_range(kx, pw_, sw_, in_.width, out_.width);
          for (int oy = 0; oy < out_.height; ++oy) {
            const int iy = oy * sh_ + ky - ph_;
            if (iy < 0 || iy >= in_.height) continue;
            double* yrow = yc + static_cast<std::size_t>(oy) * out_.width;
            const double* xrow = xc + static_cast<std::size_t>(iy) * in_.width + kx - pw_;
            if (sw_ == 1) {
              for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += w * xrow[ox];
            } else {
              for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += w * xrow[ox * sw_];
            }
          }
        }
      }
    }
  }
}

void Conv::backward(std::span<const double> params, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dx, std::span<double> grads) const {
  expect_size(x.size(), in_.size(), "conv input");
  expect_size(dy.size(), out_.size(), "conv output gradient");
  if (!dx.empty()) {
    expect_size(dx.size(), in_.size(), "conv input gradient");
    std::fill(dx.begin(), dx.end(), 0.0);
  }
  const std::size_t in_plane = static_cast<std::size_t>(in_.height) * in_.width;
  const std::size_t out_plane = static_cast<std::size_t>(out_.height) * out_.width;
  const double* W = params.data() + w_off_;
  double* dW = grads.data() + w_off_;
  double* dB = grads.data() + b_off_;
  for (int oc = 0; oc < out_.channels; ++oc) {
    const double* dyc = dy.data() + oc * out_plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) bsum += dyc[i];
    dB[oc] += bsum;
    for (int ic = 0; ic < in_.channels; ++ic) {
      const double* xc = x.data() + ic * in_plane;
      double* dxc = dx.empty() ? nullptr : dx.data() + ic * in_plane;
      for (int ky = 0; ky < kh_; ++ky) {
        for (int kx = 0; kx < kw_; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(oc) * in_.channels + ic) * kh_ + ky) * kw_ + kx;
          const double w = W[widx];
          const auto [ox0, ox1] = valid_range(kx, pw_, sw_, in_.width, out_.width);
          double acc = 0.0;
          for (int oy = 0; oy < out_.height; ++oy) {
            const int iy = oy * sh_ + ky - ph_;
            if (iy < 0 || iy >= in_.height) continue;
            const double* dyrow = dyc + static_cast<std::size_t>(oy) * out_.width;
            const std::size_t xoff = static_cast<std::size_t>(iy) * in_.width + kx - pw_;
            const double* xrow = xc + xoff;
            for (int ox = ox0; ox <= ox1; ++ox) acc += dyrow[ox] * xrow[ox * sw_];
            if (dxc) {
              double* dxrow = dxc + xoff;
              for (int ox = ox0; ox <= ox1; ++ox) dxrow[ox * sw_] += w * dyrow[ox];
            }
          }
          dW[widx] += acc;
        }
      }
    }
  }
}

MaxPool2d::MaxPool2d(Shape3 in, int kernel, int stride) : in_(in), k_(kernel), s_(stride) {
  if (in.channels < 1 || in.height < 1 || in.width < 1 || kernel < 1 || stride < 1)
    throw InputError("maxpool: invalid shape");
  out_ = {in.channels, same_output_size(in.height, stride), same_output_size(in.width, stride)};
  ph_ = same_pad_before(in.height, kernel, stride);
  pw_ = same_pad_before(in.width, kernel, stride);
}

void MaxPool2d::forward(std::span<const double> x, std::span<double> y, std::span<int> argmax) const {
  expect_size(x.size(), in_.size(), "maxpool input");
  expect_size(y.size(), out_.size(), "maxpool output");
  expect_size(argmax.size(), out_.size(), "maxpool argmax");
  std::size_t o = 0;
  for (int c = 0; c < in_.channels; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * in_.height * in_.width;
    for (int oy = 0; oy < out_.height; ++oy) {
      const int y0 = std::max(0, oy * s_ - ph_);
      const int y1 = std::min(in_.height, oy * s_ - ph_ + k_);
      for (int ox = 0; ox < out_.width; ++ox, ++o) {
        const int x0 = std::max(0, ox * s_ - pw_);
        const int x1 = std::min(in_.width, ox * s_ - pw_ + k_);
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) {
            const std::size_t idx = base + static_cast<std::size_t>(iy) * in_.width + ix;
            if (x[idx] > best || best_idx < 0) {
              best = x[idx];
              best_idx = static_cast<int>(idx);
            }
          }
        }
        y[o] = best;
        argmax[o] = best_idx;
      }
    }
  }
}

void MaxPool2d::backward(std::span<const int> argmax, std::span<const double> dy, std::span<double> dx) const {
  expect_size(dy.size(), out_.size(), "maxpool output gradient");
  expect_size(dx.size(), in_.size(), "maxpool input gradient");
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[static_cast<std::size_t>(argmax[o])] += dy[o];
}

Linear::Linear(const std::string& name, int in, int out, ParamLayout& layout) : in_(in), out_(out) {
  if (in < 1 || out < 1) throw InputError("linear '" + name + "': invalid shape");
  w_off_ = layout.add(name + ".weight", {out, in});
  b_off_ = layout.add(name + ".bias", {out});
}

void Linear::forward(std::span<const double> params, std::span<const double> x, std::span<double> y) const {
  expect_size(x.size(), static_cast<std::size_t>(in_), "linear input");
  expect_size(y.size(), static_cast<std::size_t>(out_), "linear output");
  const double* W = params.data() + w_off_;
  const double* B = params.data() + b_off_;
  for (int o = 0; o < out_; ++o) {
    const double* row = W + static_cast<std::size_t>(o) * in_;
    double acc = 0.0;
    for (int i = 0; i < in_; ++i) acc += row[i] * x[i];
    y[o] = acc + B[o];
  }
}

void Linear::backward(std::span<const double> params, std::span<const double> x, std::span<const double> dy,
                      std::span<double> dx, std::span<double> grads) const {
  expect_size(x.size(), static_cast<std::size_t>(in_), "linear input");
  expect_size(dy.size(), static_cast<std::size_t>(out_), "linear output gradient");
  const double* W = params.data() + w_off_;
  double* dW = grads.data() + w_off_;
  double* dB = grads.data() + b_off_;
  if (!dx.empty()) {
    expect_size(dx.size(), static_cast<std::size_t>(in_), "linear input gradient");
    std::fill(dx.begin(), dx.end(), 0.0);
  }
  for (int o = 0; o < out_; ++o) {
    const double g = dy[o];
    dB[o] += g;
    if (g == 0.0) continue;
    const double* row = W + static_cast<std::size_t>(o) * in_;
    double* drow = dW + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) drow[i] += g * x[i];
    if (!dx.empty())
      for (int i = 0; i < in_; ++i) dx[i] += g * row[i];
  }
}

void Relu::forward(std::span<const double> x, std::span<double> y) const {
  expect_size(x.size(), size_, "relu input");
  expect_size(y.size(), size_, "relu output");
  for (std::size_t i = 0; i < size_; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void Relu::backward(std::span<const double> y, std::span<const double> dy, std::span<double> dx) const {
  expect_size(y.size(), size_, "relu output");
  expect_size(dy.size(), size_, "relu output gradient");
  expect_size(dx.size(), size_, "relu input gradient");
  for (std::size_t i = 0; i < size_; ++i) dx[i] = y[i] > 0.0 ? dy[i] : 0.0;
}

std::size_t layer_input_size(const Layer& layer) {
  struct V {
    std::size_t operator()(const Conv& l) const { return l.in_shape().size(); }
    std::size_t operator()(const MaxPool2d& l) const { return l.in_shape().size(); }
    std::size_t operator()(const Linear& l) const { return static_cast<std::size_t>(l.in_features()); }
    std::size_t operator()(const Relu& l) const { return l.size(); }
  };
  return std::visit(V{}, layer);
}

std::size_t layer_output_size(const Layer& layer) {
  struct V {
    std::size_t operator()(const Conv& l) const { return l.out_shape().size(); }
    std::size_t operator()(const MaxPool2d& l) const { return l.out_shape().size(); }
    std::size_t operator()(const Linear& l) const { return static_cast<std::size_t>(l.out_features()); }
    std::size_t operator()(const Relu& l) const { return l.size(); }
  };
  return std::visit(V{}, layer);
}

void Sequential::add(Layer layer) {
  if (!layers_.empty() && layer_input_size(layer) != layer_output_size(layers_.back()))
    throw InputError("sequential: layer input size does not match previous output");
  layers_.push_back(std::move(layer));
}

std::size_t Sequential::input_size() const { return layers_.empty() ? 0 : layer_input_size(layers_.front()); }
std::size_t Sequential::output_size() const { return layers_.empty() ? 0 : layer_output_size(layers_.back()); }

std::span<const double> Sequential::forward(std::span<const double> params, std::span<const double> x,
                                            SequentialCache& cache) const {
  expect_size(x.size(), input_size(), "sequential input");
  cache.acts.resize(layers_.size() + 1);
  cache.argmax.resize(layers_.size());
  cache.acts[0].assign(x.begin(), x.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::vector<double>& out = cache.acts[i + 1];
    out.resize(layer_output_size(layers_[i]));
    const std::vector<double>& in = cache.acts[i];
    if (const auto* conv = std::get_if<Conv>(&layers_[i])) {
      conv->forward(params, in, out);
    } else if (const auto* pool = std::get_if<MaxPool2d>(&layers_[i])) {
      cache.argmax[i].resize(out.size());
      pool->forward(in, out, cache.argmax[i]);
    } else if (const auto* lin = std::get_if<Linear>(&layers_[i])) {
      lin->forward(params, in, out);
    } else {
      std::get<Relu>(layers_[i]).forward(in, out);
    }
  }
  cache.valid = true;
  return cache.acts.back();
}

void Sequential::backward(std::span<const double> params, const SequentialCache& cache,
                          std::span<const double> dy, std::span<double> dx, std::span<double> grads) const {
  if (!cache.valid || cache.acts.size() != layers_.size() + 1)
    throw StateError("backward called without a matching forward pass");
  expect_size(dy.size(), output_size(), "sequential output gradient");
  std::vector<double> upstream(dy.begin(), dy.end());
  std::vector<double> down;
  for (std::size_t r = layers_.size(); r-- > 0;) {
    const bool need_dx = r > 0 || !dx.empty();
    const std::vector<double>& in = cache.acts[r];
    down.assign(need_dx ? in.size() : 0, 0.0);
    if (const auto* conv = std::get_if<Conv>(&layers_[r])) {
      conv->backward(params, in, upstream, down, grads);
    } else if (const auto* pool = std::get_if<MaxPool2d>(&layers_[r])) {
      if (need_dx) pool->backward(cache.argmax[r], upstream, down);
    } else if (const auto* lin = std::get_if<Linear>(&layers_[r])) {
      lin->backward(params, in, upstream, down, grads);
    } else {
      if (need_dx) std::get<Relu>(layers_[r]).backward(cache.acts[r + 1], upstream, down);
    }
    if (!need_dx) break;
    upstream.swap(down);
  }
  if (!dx.empty()) {
    expect_size(dx.size(), input_size(), "sequential input gradient");
    std::copy(upstream.begin(), upstream.end(), dx.begin());
  }
}

}  // namespace mapnav::nn
