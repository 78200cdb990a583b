#ifndef MAPNAV_SENSOR_HPP_
#define MAPNAV_SENSOR_HPP_

#include <cstddef>
#include <vector>

#include "mapnav/world_state.hpp"

namespace mapnav {

struct ScanFrame {
  std::vector<double> ranges;
};

/// Fixed-length FIFO of scan frames, oldest first.
struct ScanStack {
  std::vector<ScanFrame> frames;
};

/// World-frame angle of beam k.
double beam_angle(double heading, double fov, int beams, int k);

/// Analytic 2D laser scan from `origin` against obstacle boundaries and the
/// discs of every active agent except `excluded_agent` (pass -1 for none).
ScanFrame raycast(Vec2 origin, double heading, const WorldState& world, int excluded_agent);

/// A fresh stack holding `frames` copies of `first`.
ScanStack make_scan_stack(const ScanFrame& first, int frames);

/// Drops the oldest frame and appends `frame`. Throws InputError on a beam
/// count mismatch.
ScanStack push_frame(ScanStack stack, ScanFrame frame);

}  // namespace mapnav

#endif  // MAPNAV_SENSOR_HPP_
