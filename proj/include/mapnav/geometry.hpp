#ifndef MAPNAV_GEOMETRY_HPP_
#define MAPNAV_GEOMETRY_HPP_

#include <cmath>
#include <optional>
#include <vector>

namespace mapnav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct Aabb {
  Vec2 min;
  Vec2 max;
};

/// Closed convex polygon with counter-clockwise vertices.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  /// Accepts either winding; throws InputError if the polygon is not convex
  /// or has zero area.
  explicit ConvexPolygon(std::vector<Vec2> vertices);

  static ConvexPolygon rectangle(Vec2 min_corner, Vec2 max_corner);
  static ConvexPolygon rotated_rectangle(Vec2 center, double half_width, double half_height,
                                         double angle);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Aabb& bounds() const { return bounds_; }
  double area() const;
  bool is_axis_aligned_rectangle() const { return axis_aligned_; }

  bool contains(Vec2 p) const;
  /// Euclidean distance from p to the closed polygon (0 inside).
  double distance_to(Vec2 p) const;
  ConvexPolygon translated(Vec2 offset) const;

 private:
  std::vector<Vec2> vertices_;
  Aabb bounds_{};
  bool axis_aligned_ = false;
};

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Smallest t >= 0 with origin + t*dir on segment [a, b]; dir must be unit.
std::optional<double> ray_segment_hit(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b);

/// Smallest t >= 0 with origin + t*dir on the circle boundary.
std::optional<double> ray_circle_hit(Vec2 origin, Vec2 dir, Vec2 center, double radius);

}  // namespace mapnav

#endif  // MAPNAV_GEOMETRY_HPP_
