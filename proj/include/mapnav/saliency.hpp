#ifndef MAPNAV_SALIENCY_HPP_
#define MAPNAV_SALIENCY_HPP_

#include <string>
#include <vector>

#include "mapnav/network.hpp"

namespace mapnav {

/// Row-major h x w scores, max-normalized to [0, 1].
struct SaliencyGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  double raw_max = 0.0;  // largest unnormalized score

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct SaliencyOptions {
  int stride = 5;
  int blur_radius = 5;
  int channel = 0;  // which map channel of the network input is perturbed
  bool map_ablated = false;
  int threads = 1;
};

/// Gaussian blur with sigma = radius / 2, kernel truncated at `radius`,
/// renormalized at the borders.
std::vector<double> gaussian_blur(const std::vector<double>& image, int rows, int cols, int radius);

/// Raw score at one site: the disc of `radius` around (r, c) is replaced by
/// the blurred map and s = 0.5 * |mean' - mean|^2 on the pre-squash mean.
double saliency_score(const PolicyNetwork& net, const NetInput& input, const std::vector<double>& blurred,
                      int r, int c, const SaliencyOptions& options);

/// Scores on a stride grid, bilinearly upsampled to the map size and
/// max-normalized. An all-zero grid means the output ignores the map.
SaliencyGrid perturbation_saliency(const PolicyNetwork& net, const NetInput& input, const SaliencyOptions& options);

/// 8-bit PGM, value * 255.
void write_saliency_pgm(const SaliencyGrid& grid, const std::string& path);

}  // namespace mapnav

#endif  // MAPNAV_SALIENCY_HPP_
