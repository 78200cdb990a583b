#include "mapnav/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mapnav/errors.hpp"
#include "mapnav/rng.hpp"

namespace mapnav {

std::string kind_name(const ScenarioKind& kind) {
  struct Visitor {
    std::string operator()(const CircleCrossing&) const { return "circle_crossing"; }
    std::string operator()(const NarrowCorridor&) const { return "narrow_corridor"; }
    std::string operator()(const RoomWithObstacles&) const { return "room_with_obstacles"; }
    std::string operator()(const RandomStartsGoals&) const { return "random_starts_goals"; }
    std::string operator()(const RoomEvacuation&) const { return "room_evacuation"; }
    std::string operator()(const FreeRandom&) const { return "free_random"; }
  };
  return std::visit(Visitor{}, kind);
}

int agent_count(const ScenarioKind& kind) {
  return std::visit([](const auto& k) { return k.n; }, kind);
}

void set_agent_count(ScenarioKind& kind, int n) {
  std::visit([n](auto& k) { k.n = n; }, kind);
}

namespace {

constexpr double kWallThickness = 0.2;

void add_box_walls(std::vector<Obstacle>& out, double half_x, double half_y) {
  const double t = kWallThickness;
  out.push_back({ConvexPolygon::rectangle({-half_x - t, -half_y - t}, {half_x + t, -half_y})});
  out.push_back({ConvexPolygon::rectangle({-half_x - t, half_y}, {half_x + t, half_y + t})});
  out.push_back({ConvexPolygon::rectangle({-half_x - t, -half_y}, {-half_x, half_y})});
  out.push_back({ConvexPolygon::rectangle({half_x, -half_y}, {half_x + t, half_y})});
}

class Builder {
 public:
  Builder(const ScenarioSpec& spec, const WorldConfig& config)
      : rng_(spec.seed), radius_(config.robot_radius_m), clearance_(spec.clearance_m) {
    state_.config = config;
  }

  Rng& rng() { return rng_; }
  double radius() const { return radius_; }
  double separation() const { return 2.0 * radius_ + clearance_; }
  std::vector<Obstacle>& obstacles() { return state_.obstacles; }

  void count_attempt() {
    if (++attempts_ > kMaxRejectionAttempts)
      throw GenerationError("scenario: infeasible placement after " + std::to_string(kMaxRejectionAttempts) +
                            " rejection attempts");
  }

  bool obstacle_clear(Vec2 p) const {
    return std::all_of(state_.obstacles.begin(), state_.obstacles.end(),
                       [&](const Obstacle& ob) { return ob.shape.distance_to(p) > radius_ + clearance_; });
  }

  static bool separated(Vec2 p, const std::vector<Vec2>& others, double sep) {
    return std::all_of(others.begin(), others.end(), [&](Vec2 o) { return distance(p, o) > sep; });
  }

  void add_agent(Vec2 start, Vec2 goal) {
    AgentState a;
    a.position = start;
    a.start = start;
    a.goal = goal;
    const Vec2 d = goal - start;
    a.heading_rad = (d.x == 0.0 && d.y == 0.0) ? 0.0 : std::atan2(d.y, d.x);
    state_.agents.push_back(a);
  }

  /// Rejects the layout unless starts and goals keep the required gaps.
  void check_layout() const {
    for (std::size_t i = 0; i < state_.agents.size(); ++i) {
      const AgentState& a = state_.agents[i];
      if (!obstacle_clear(a.position) || !obstacle_clear(a.goal))
        throw GenerationError("scenario: agent " + std::to_string(i) + " start or goal overlaps an obstacle");
      for (std::size_t j = 0; j < i; ++j) {
        if (distance(a.position, state_.agents[j].position) <= 2.0 * radius_)
          throw GenerationError("scenario: starts of agents " + std::to_string(j) + " and " + std::to_string(i) +
                                " overlap");
      }
    }
  }

  WorldState finish() {
    check_layout();
    return std::move(state_);
  }

 private:
  Rng rng_;
  double radius_;
  double clearance_;
  long attempts_ = 0;
  WorldState state_;
};

void require_agents(int n) {
  if (n < 1) throw GenerationError("scenario: need at least one agent");
}

WorldState circle_crossing(const CircleCrossing& k, Builder& b) {
  require_agents(k.n);
  if (!(k.radius_m > 0.0)) throw GenerationError("circle_crossing: radius must be > 0");
  if (k.n > 1 && 2.0 * k.radius_m * std::sin(std::numbers::pi / k.n) <= 2.0 * b.radius())
    throw GenerationError("circle_crossing: circle too small for " + std::to_string(k.n) + " agents");
  for (int i = 0; i < k.n; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / k.n;
    const Vec2 start{k.radius_m * std::cos(angle), k.radius_m * std::sin(angle)};
    b.add_agent(start, -start);
  }
  return b.finish();
}

// Grid of `count` slots with the given spacing, filled column-major. The
// first column sits at x0 and further columns step by dx.
std::vector<Vec2> grid_slots(int count, int rows, double x0, double dx, double spacing) {
  std::vector<Vec2> slots;
  for (int i = 0; i < count; ++i) {
    const int col = i / rows;
    const int row = i % rows;
    const int rows_here = std::min(rows, count - col * rows);
    slots.push_back({x0 + col * dx, (row - (rows_here - 1) / 2.0) * spacing});
  }
  return slots;
}

WorldState narrow_corridor(const NarrowCorridor& k, Builder& b) {
  require_agents(k.n);
  const double width = k.corridor_width_m > 0.0 ? k.corridor_width_m : 4.0 * b.radius();
  if (width <= 2.0 * b.radius()) throw GenerationError("narrow_corridor: corridor narrower than a robot");
  if (!(k.corridor_length_m > 0.0)) throw GenerationError("narrow_corridor: length must be > 0");
  const double half_len = k.corridor_length_m / 2.0;
  const double spacing = b.separation() + 0.1;
  const int rows = 4;
  const int left = (k.n + 1) / 2;
  const int right = k.n - left;
  const int cols = (left + rows - 1) / rows;
  const double half_x = half_len + 1.0 + cols * spacing + 1.0;
  const double half_y = std::max(rows * spacing / 2.0 + 1.5, 3.0);

  add_box_walls(b.obstacles(), half_x, half_y);
  b.obstacles().push_back({ConvexPolygon::rectangle({-half_len, width / 2.0}, {half_len, half_y})});
  b.obstacles().push_back({ConvexPolygon::rectangle({-half_len, -half_y}, {half_len, -width / 2.0})});

  const std::vector<Vec2> left_slots = grid_slots(left, rows, -half_len - 1.0, -spacing, spacing);
  const std::vector<Vec2> right_slots = grid_slots(right, rows, half_len + 1.0, spacing, spacing);
  for (const Vec2& s : left_slots) b.add_agent(s, {-s.x, s.y});
  for (const Vec2& s : right_slots) b.add_agent(s, {-s.x, s.y});
  return b.finish();
}

ConvexPolygon random_block(Rng& rng, Vec2 lo, Vec2 hi) {
  const Vec2 c{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
  return ConvexPolygon::rotated_rectangle(c, rng.uniform(0.2, 0.6), rng.uniform(0.2, 0.6),
                                          rng.uniform(0.0, std::numbers::pi));
}

bool block_clear(const ConvexPolygon& block, const std::vector<Vec2>& points, double gap) {
  return std::all_of(points.begin(), points.end(), [&](Vec2 p) { return block.distance_to(p) > gap; });
}

WorldState room_with_obstacles(const RoomWithObstacles& k, Builder& b) {
  require_agents(k.n);
  if (k.obstacle_count < 0) throw GenerationError("room_with_obstacles: obstacle_count must be >= 0");
  const double half = k.room_size_m / 2.0;
  const double spacing = b.separation() + 0.1;
  const int rows = std::max(1, static_cast<int>(std::floor((k.room_size_m - 1.0) / spacing)));
  const std::vector<Vec2> starts = grid_slots(k.n, rows, -half + 0.6, spacing, spacing);
  if (starts.back().x >= -1.0) throw GenerationError("room_with_obstacles: room too small for agent count");
  add_box_walls(b.obstacles(), half, half);

  std::vector<Vec2> keep_clear;
  for (const Vec2& s : starts) {
    keep_clear.push_back(s);
    keep_clear.push_back({-s.x, s.y});
  }
  const double gap = b.radius() + b.separation();
  const double inner = std::max(0.5, half - 2.0);
  int placed = 0;
  while (placed < k.obstacle_count) {
    b.count_attempt();
    ConvexPolygon block = random_block(b.rng(), {-inner, -half + 0.5}, {inner, half - 0.5});
    if (!block_clear(block, keep_clear, gap)) continue;
    b.obstacles().push_back({std::move(block)});
    ++placed;
  }
  for (const Vec2& s : starts) b.add_agent(s, {-s.x, s.y});
  return b.finish();
}

std::vector<Vec2> sample_points(Builder& b, int n, Vec2 lo, Vec2 hi, const std::vector<Vec2>& avoid) {
  std::vector<Vec2> points;
  while (static_cast<int>(points.size()) < n) {
    b.count_attempt();
    const Vec2 p{b.rng().uniform(lo.x, hi.x), b.rng().uniform(lo.y, hi.y)};
    if (!b.obstacle_clear(p)) continue;
    if (!Builder::separated(p, points, b.separation())) continue;
    if (!Builder::separated(p, avoid, b.separation())) continue;
    points.push_back(p);
  }
  return points;
}

WorldState random_starts_goals(const RandomStartsGoals& k, Builder& b) {
  require_agents(k.n);
  if (k.obstacle_count < 0) throw GenerationError("random_starts_goals: obstacle_count must be >= 0");
  const double half = k.extent_m / 2.0;
  for (int i = 0; i < k.obstacle_count; ++i)
    b.obstacles().push_back({random_block(b.rng(), {-half + 1.0, -half + 1.0}, {half - 1.0, half - 1.0})});
  const std::vector<Vec2> starts = sample_points(b, k.n, {-half, -half}, {half, half}, {});
  const std::vector<Vec2> goals = sample_points(b, k.n, {-half, -half}, {half, half}, {});
  for (int i = 0; i < k.n; ++i) b.add_agent(starts[i], goals[i]);
  return b.finish();
}

WorldState room_evacuation(const RoomEvacuation& k, Builder& b) {
  require_agents(k.n);
  if (k.door_width_m <= 2.0 * b.radius()) throw GenerationError("room_evacuation: door narrower than a robot");
  const double half = k.room_size_m / 2.0;
  if (k.door_width_m >= k.room_size_m) throw GenerationError("room_evacuation: door wider than the room");
  const double t = kWallThickness;
  auto& obs = b.obstacles();
  obs.push_back({ConvexPolygon::rectangle({-half - t, -half - t}, {half + t, -half})});
  obs.push_back({ConvexPolygon::rectangle({-half - t, half}, {half + t, half + t})});
  obs.push_back({ConvexPolygon::rectangle({-half - t, -half}, {-half, half})});
  obs.push_back({ConvexPolygon::rectangle({half, -half}, {half + t, -k.door_width_m / 2.0})});
  obs.push_back({ConvexPolygon::rectangle({half, k.door_width_m / 2.0}, {half + t, half})});

  const double spacing = b.separation() + 0.1;
  const int rows = std::max(1, static_cast<int>(std::floor(k.room_size_m / spacing)));
  const std::vector<Vec2> goals = grid_slots(k.n, rows, half + 1.5, spacing, spacing);
  const double margin = b.radius() + 0.3;
  const std::vector<Vec2> starts =
      sample_points(b, k.n, {-half + margin, -half + margin}, {half - margin, half - margin}, {});
  for (int i = 0; i < k.n; ++i) b.add_agent(starts[i], goals[i]);
  return b.finish();
}

WorldState free_random(const FreeRandom& k, Builder& b) {
  require_agents(k.n);
  if (!(k.extent_m > 0.0)) throw GenerationError("free_random: extent must be > 0");
  const double half = k.extent_m / 2.0;
  const std::vector<Vec2> starts = sample_points(b, k.n, {-half, -half}, {half, half}, {});
  std::vector<Vec2> goals;
  if (k.goal_distance_m > 0.0) {
    while (static_cast<int>(goals.size()) < k.n) {
      b.count_attempt();
      const double angle = b.rng().uniform(-std::numbers::pi, std::numbers::pi);
      const Vec2 g = starts[goals.size()] + Vec2{std::cos(angle), std::sin(angle)} * k.goal_distance_m;
      if (std::abs(g.x) > half || std::abs(g.y) > half) continue;
      if (!Builder::separated(g, goals, b.separation())) continue;
      goals.push_back(g);
    }
  } else {
    goals = sample_points(b, k.n, {-half, -half}, {half, half}, {});
  }
  for (int i = 0; i < k.n; ++i) b.add_agent(starts[i], goals[i]);
  return b.finish();
}

}  // namespace

WorldState generate_state(const ScenarioSpec& spec, const WorldConfig& config) {
  config.validate();
  if (!(spec.clearance_m >= 0.0)) throw GenerationError("scenario: clearance_m must be >= 0");
  Builder b(spec, config);
  struct Visitor {
    Builder& b;
    WorldState operator()(const CircleCrossing& k) const { return circle_crossing(k, b); }
    WorldState operator()(const NarrowCorridor& k) const { return narrow_corridor(k, b); }
    WorldState operator()(const RoomWithObstacles& k) const { return room_with_obstacles(k, b); }
    WorldState operator()(const RandomStartsGoals& k) const { return random_starts_goals(k, b); }
    WorldState operator()(const RoomEvacuation& k) const { return room_evacuation(k, b); }
    WorldState operator()(const FreeRandom& k) const { return free_random(k, b); }
  };
  return std::visit(Visitor{b}, spec.kind);
}

World generate(const ScenarioSpec& spec, const WorldConfig& config, const RewardParams& reward) {
  WorldState state = generate_state(spec, config);
  return World(state.config, reward, std::move(state.agents), std::move(state.obstacles));
}

}  // namespace mapnav
