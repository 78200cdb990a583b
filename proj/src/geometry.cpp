#include "mapnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mapnav/errors.hpp"

namespace mapnav {

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (angle > -kPi && angle <= kPi) return angle;
  double wrapped = std::fmod(angle + kPi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  wrapped -= kPi;
  // fmod maps +pi to -pi; the interval is open at -pi.
  if (wrapped <= -kPi) wrapped += kTwoPi;
  return wrapped;
}

ConvexPolygon::ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw InputError("polygon needs at least 3 vertices");
  for (const Vec2& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InputError("polygon vertex is not finite");
  }
  double signed_area = 0.0;
  for (std::size_t i = 0; i < n; ++i) signed_area += cross(vertices_[i], vertices_[(i + 1) % n]);
  if (signed_area == 0.0) throw InputError("polygon has zero area");
  if (signed_area < 0.0) std::reverse(vertices_.begin(), vertices_.end());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = vertices_[(i + 1) % n] - vertices_[i];
    const Vec2 e1 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
    if (cross(e0, e1) < 0.0) throw InputError("polygon is not convex");
  }

  bounds_.min = bounds_.max = vertices_.front();
  for (const Vec2& v : vertices_) {
    bounds_.min = {std::min(bounds_.min.x, v.x), std::min(bounds_.min.y, v.y)};
    bounds_.max = {std::max(bounds_.max.x, v.x), std::max(bounds_.max.y, v.y)};
  }
  axis_aligned_ = n == 4 && std::all_of(vertices_.begin(), vertices_.end(), [&](Vec2 v) {
                    return (v.x == bounds_.min.x || v.x == bounds_.max.x) &&
                           (v.y == bounds_.min.y || v.y == bounds_.max.y);
                  });
}

ConvexPolygon ConvexPolygon::rectangle(Vec2 lo, Vec2 hi) {
  return ConvexPolygon({{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}});
}

ConvexPolygon ConvexPolygon::rotated_rectangle(Vec2 c, double hw, double hh, double angle) {
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  auto corner = [&](double u, double v) { return Vec2{c.x + u * cs - v * sn, c.y + u * sn + v * cs}; };
  return ConvexPolygon({corner(-hw, -hh), corner(hw, -hh), corner(hw, hh), corner(-hw, hh)});
}

double ConvexPolygon::area() const {
  double a = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    a += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  return 0.5 * a;
}

bool ConvexPolygon::contains(Vec2 p) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(vertices_[(i + 1) % n] - vertices_[i], p - vertices_[i]) < 0.0) return false;
  }
  return true;
}

double ConvexPolygon::distance_to(Vec2 p) const {
  if (contains(p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, point_segment_distance(p, vertices_[i], vertices_[(i + 1) % n]));
  return best;
}

ConvexPolygon ConvexPolygon::translated(Vec2 offset) const {
  ConvexPolygon out = *this;
  for (Vec2& v : out.vertices_) v = v + offset;
  out.bounds_.min = bounds_.min + offset;
  out.bounds_.max = bounds_.max + offset;
  return out;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + ab * t);
}

std::optional<double> ray_segment_hit(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
  const Vec2 seg = b - a;
  const double denom = cross(dir, seg);
  const Vec2 ao = a - origin;
  if (denom == 0.0) {
    // Parallel; collinear overlap returns the nearest endpoint ahead.
    if (cross(ao, dir) != 0.0) return std::nullopt;
    const double ta = dot(a - origin, dir);
    const double tb = dot(b - origin, dir);
    if (ta < 0.0 && tb < 0.0) return std::nullopt;
    if (ta < 0.0 || tb < 0.0) return 0.0;
    return std::min(ta, tb);
  }
  const double t = cross(ao, seg) / denom;
  const double u = cross(ao, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

std::optional<double> ray_circle_hit(Vec2 origin, Vec2 dir, Vec2 center, double radius) {
  const Vec2 oc = origin - center;
  const double b = dot(oc, dir);
  const double c = oc.squared_norm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double t0 = -b - root;
  if (t0 >= 0.0) return t0;
  const double t1 = -b + root;
  if (t1 >= 0.0) return t1;
  return std::nullopt;
}

}  // namespace mapnav
