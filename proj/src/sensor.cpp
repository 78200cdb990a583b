#include "mapnav/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "mapnav/errors.hpp"

namespace mapnav {

double beam_angle(double heading, double fov, int beams, int k) {
  if (beams <= 1) return heading;
  return heading - fov / 2.0 + k * fov / (beams - 1);
}

ScanFrame raycast(Vec2 origin, double heading, const WorldState& world, int excluded_agent) {
  const WorldConfig& cfg = world.config;
  const int beams = cfg.scan_beams;
  if (beams < 1) throw InputError("raycast: scan_beams must be >= 1");
  const double range = cfg.scan_range_m;
  const double radius = cfg.robot_radius_m;

  // Cull everything that cannot be reached within the scan range.
  std::vector<Vec2> discs;
  for (std::size_t j = 0; j < world.agents.size(); ++j) {
    const AgentState& other = world.agents[j];
    if (static_cast<int>(j) == excluded_agent || !other.active()) continue;
    if (distance(other.position, origin) <= range + radius) discs.push_back(other.position);
  }
  std::vector<const ConvexPolygon*> polys;
  for (const Obstacle& ob : world.obstacles) {
    const Aabb& b = ob.shape.bounds();
    const double dx = std::max({b.min.x - origin.x, 0.0, origin.x - b.max.x});
    const double dy = std::max({b.min.y - origin.y, 0.0, origin.y - b.max.y});
    if (dx * dx + dy * dy <= range * range) polys.push_back(&ob.shape);
  }

  ScanFrame frame;
  frame.ranges.assign(static_cast<std::size_t>(beams), range);
  for (int k = 0; k < beams; ++k) {
    const double angle = beam_angle(heading, cfg.scan_fov_rad, beams, k);
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    double best = range;
    for (const Vec2& c : discs) {
      if (auto t = ray_circle_hit(origin, dir, c, radius)) best = std::min(best, *t);
    }
    for (const ConvexPolygon* poly : polys) {
      const auto& v = poly->vertices();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto t = ray_segment_hit(origin, dir, v[i], v[(i + 1) % v.size()]))
          best = std::min(best, *t);
      }
    }
    frame.ranges[static_cast<std::size_t>(k)] = best;
  }
  return frame;
}

ScanStack make_scan_stack(const ScanFrame& first, int frames) {
  if (frames < 1) throw InputError("scan stack needs at least one frame");
  ScanStack stack;
  stack.frames.assign(static_cast<std::size_t>(frames), first);
  return stack;
}

ScanStack push_frame(ScanStack stack, ScanFrame frame) {
  if (stack.frames.empty()) throw InputError("push_frame: stack is empty");
  if (frame.ranges.size() != stack.frames.front().ranges.size())
    throw InputError("push_frame: beam count mismatch");
  std::rotate(stack.frames.begin(), stack.frames.begin() + 1, stack.frames.end());
  stack.frames.back() = std::move(frame);
  return stack;
}

}  // namespace mapnav
