#include "mapnav/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mapnav/errors.hpp"
#include "mapnav/parallel.hpp"

namespace mapnav {

std::vector<double> gaussian_blur(const std::vector<double>& image, int rows, int cols, int radius) {
  if (image.size() != static_cast<std::size_t>(rows) * cols) throw InputError("gaussian_blur: size mismatch");
  if (radius < 1) throw InputError("gaussian_blur: radius must be >= 1");
  const double sigma = radius / 2.0;
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));

  // Separable: rows then columns, each renormalized over in-bounds taps.
  std::vector<double> tmp(image.size()), out(image.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0, w = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        const int cc = c + d;
        if (cc < 0 || cc >= cols) continue;
        s += k[d + radius] * image[static_cast<std::size_t>(r) * cols + cc];
        w += k[d + radius];
      }
      tmp[static_cast<std::size_t>(r) * cols + c] = s / w;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0, w = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        const int rr = r + d;
        if (rr < 0 || rr >= rows) continue;
        s += k[d + radius] * tmp[static_cast<std::size_t>(rr) * cols + c];
        w += k[d + radius];
      }
      out[static_cast<std::size_t>(r) * cols + c] = s / w;
    }
  return out;
}

namespace {

struct Plane {
  int rows, cols;
  std::size_t offset;
};

Plane channel_plane(const PolicyNetwork& net, int channel) {
  const NetConfig& c = net.config();
  if (channel < 0 || channel >= c.map_channels()) throw InputError("saliency: map channel out of range");
  const int rows = c.map_cells.rows, cols = c.map_cells.cols;
  return {rows, cols, static_cast<std::size_t>(channel) * rows * cols};
}

double score_against(const PolicyNetwork& net, const NetInput& input, const NetOutput& base,
                     const std::vector<double>& blurred, const Plane& plane, int r, int c, int radius,
                     bool map_ablated, std::vector<double>& scratch) {
  scratch.assign(input.map.begin(), input.map.end());
  const int r2 = radius * radius;
  for (int dr = -radius; dr <= radius; ++dr)
    for (int dc = -radius; dc <= radius; ++dc) {
      const int rr = r + dr, cc = c + dc;
      if (dr * dr + dc * dc > r2 || rr < 0 || rr >= plane.rows || cc < 0 || cc >= plane.cols) continue;
      const std::size_t i = static_cast<std::size_t>(rr) * plane.cols + cc;
      scratch[plane.offset + i] = blurred[i];
    }
  NetInput perturbed = input;
  perturbed.map = scratch;
  const NetOutput out = net.forward(perturbed, map_ablated);
  const double d0 = out.mean[0] - base.mean[0];
  const double d1 = out.mean[1] - base.mean[1];
  return 0.5 * (d0 * d0 + d1 * d1);
}

std::vector<double> blurred_plane(const NetInput& input, const Plane& plane, int radius) {
  std::vector<double> img(input.map.begin() + static_cast<std::ptrdiff_t>(plane.offset),
                          input.map.begin() + static_cast<std::ptrdiff_t>(plane.offset + plane.rows * plane.cols));
  return gaussian_blur(img, plane.rows, plane.cols, radius);
}

}  // namespace

double saliency_score(const PolicyNetwork& net, const NetInput& input, const std::vector<double>& blurred, int r,
                      int c, const SaliencyOptions& options) {
  const Plane plane = channel_plane(net, options.channel);
  const NetOutput base = net.forward(input, options.map_ablated);
  std::vector<double> scratch;
  return score_against(net, input, base, blurred, plane, r, c, options.blur_radius, options.map_ablated, scratch);
}

SaliencyGrid perturbation_saliency(const PolicyNetwork& net, const NetInput& input, const SaliencyOptions& options) {
  if (options.stride < 1) throw InputError("saliency: stride must be >= 1");
  const Plane plane = channel_plane(net, options.channel);
  const NetOutput base = net.forward(input, options.map_ablated);
  const std::vector<double> blurred = blurred_plane(input, plane, options.blur_radius);

  const int s = options.stride;
  const int gr = (plane.rows - 1) / s + 1;
  const int gc = (plane.cols - 1) / s + 1;
  std::vector<double> coarse(static_cast<std::size_t>(gr) * gc, 0.0);
  parallel_for(coarse.size(), options.threads, [&](std::size_t k) {
    std::vector<double> scratch;
    const int i = static_cast<int>(k) / gc, j = static_cast<int>(k) % gc;
    coarse[k] = score_against(net, input, base, blurred, plane, i * s, j * s, options.blur_radius,
                              options.map_ablated, scratch);
  });

  SaliencyGrid grid{plane.rows, plane.cols, std::vector<double>(static_cast<std::size_t>(plane.rows) * plane.cols), 0.0};
  for (int r = 0; r < plane.rows; ++r) {
    const double fr = static_cast<double>(r) / s;
    const int r0 = std::min(static_cast<int>(fr), gr - 1), r1 = std::min(r0 + 1, gr - 1);
    const double tr = std::clamp(fr - r0, 0.0, 1.0);
    for (int c = 0; c < plane.cols; ++c) {
      const double fc = static_cast<double>(c) / s;
      const int c0 = std::min(static_cast<int>(fc), gc - 1), c1 = std::min(c0 + 1, gc - 1);
      const double tc = std::clamp(fc - c0, 0.0, 1.0);
      auto g = [&](int a, int b) { return coarse[static_cast<std::size_t>(a) * gc + b]; };
      const double v = (1 - tr) * ((1 - tc) * g(r0, c0) + tc * g(r0, c1)) + tr * ((1 - tc) * g(r1, c0) + tc * g(r1, c1));
      grid.values[static_cast<std::size_t>(r) * plane.cols + c] = v;
    }
  }
  grid.raw_max = *std::max_element(coarse.begin(), coarse.end());
  const double m = *std::max_element(grid.values.begin(), grid.values.end());
  if (m > 0.0)
    for (double& v : grid.values) v /= m;
  return grid;
}

void write_saliency_pgm(const SaliencyGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << "P5\n" << grid.cols << ' ' << grid.rows << "\n255\n";
  for (double v : grid.values) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
}

}  // namespace mapnav
