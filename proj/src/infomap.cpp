#include "mapnav/infomap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mapnav/errors.hpp"

namespace mapnav {

MapLabel InfoMap::at(int p, int q) const {
  const auto it = std::lower_bound(cells.begin(), cells.end(), std::pair{p, q},
                                   [](const MapCell& c, const std::pair<int, int>& key) {
                                     return std::pair{c.p, c.q} < key;
                                   });
  if (it != cells.end() && it->p == p && it->q == q) return it->label;
  return MapLabel::Background;
}

double cell_lower_x(const MapWindow& w, int p) {
  return (p - 1) * w.extent.height / w.cells.rows - w.extent.height / 2;
}

double cell_lower_y(const MapWindow& w, int q) {
  return (q - 1) * w.extent.width / w.cells.cols - w.extent.width / 2;
}

bool disc_touches_cell(Vec2 c, double r, double x0, double x1, double y0, double y1) {
  // The infimum over the half-open side is not attained, which turns the
  // test strict.
  double dx = 0.0;
  bool open_x = false;
  if (c.x > x1) {
    dx = c.x - x1;
  } else if (c.x <= x0) {
    dx = x0 - c.x;
    open_x = true;
  }
  double dy = 0.0;
  bool open_y = false;
  if (c.y > y1) {
    dy = c.y - y1;
  } else if (c.y <= y0) {
    dy = y0 - c.y;
    open_y = true;
  }
  const double d2 = dx * dx + dy * dy;
  return (open_x || open_y) ? d2 < r * r : d2 <= r * r;
}

bool polygon_touches_cell(const ConvexPolygon& poly, double x0, double x1, double y0, double y1) {
  const Aabb& b = poly.bounds();
  if (!(b.max.x > x0 && b.min.x <= x1)) return false;
  if (!(b.max.y > y0 && b.min.y <= y1)) return false;
  if (poly.is_axis_aligned_rectangle()) return true;

  const Vec2 corners[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 edge = v[(i + 1) % v.size()] - v[i];
    const Vec2 normal{edge.y, -edge.x};
    double pmin = dot(normal, v[0]);
    double pmax = pmin;
    for (const Vec2& p : v) {
      pmin = std::min(pmin, dot(normal, p));
      pmax = std::max(pmax, dot(normal, p));
    }
    double rmin = dot(normal, corners[0]);
    double rmax = rmin;
    for (const Vec2& c : corners) {
      rmin = std::min(rmin, dot(normal, c));
      rmax = std::max(rmax, dot(normal, c));
    }
    if (rmax < pmin || rmin > pmax) return false;
  }
  return true;
}

namespace {

struct IndexRange {
  int first = 1;
  int last = 0;
};

IndexRange candidate_range(double lo, double hi, double extent, int count) {
  const double cell = extent / count;
  const int first = static_cast<int>(std::floor((lo + extent / 2) / cell));
  const int last = static_cast<int>(std::floor((hi + extent / 2) / cell)) + 2;
  return {std::max(1, first), std::min(count, last)};
}

bool inside_window(const MapWindow& w, double xlo, double xhi, double ylo, double yhi) {
  return xlo > -w.extent.height / 2 && xhi <= w.extent.height / 2 && ylo > -w.extent.width / 2 &&
         yhi <= w.extent.width / 2;
}

class Rasterizer {
 public:
  Rasterizer(const MapWindow& window, RasterStats* stats) : w_(window), stats_(stats) {}

  void disc(Vec2 c, double r, MapLabel label) {
    if (!inside_window(w_, c.x - r, c.x + r, c.y - r, c.y + r)) ++clipped_;
    const IndexRange pr = candidate_range(c.x - r, c.x + r, w_.extent.height, w_.cells.rows);
    const IndexRange qr = candidate_range(c.y - r, c.y + r, w_.extent.width, w_.cells.cols);
    for (int p = pr.first; p <= pr.last; ++p) {
      const double x0 = cell_lower_x(w_, p);
      const double x1 = cell_lower_x(w_, p + 1);
      for (int q = qr.first; q <= qr.last; ++q) {
        count_test();
        if (disc_touches_cell(c, r, x0, x1, cell_lower_y(w_, q), cell_lower_y(w_, q + 1)))
          entries_.push_back({p, q, label});
      }
    }
  }

  void polygon(const ConvexPolygon& poly) {
    const Aabb& b = poly.bounds();
    if (!inside_window(w_, b.min.x, b.max.x, b.min.y, b.max.y)) ++clipped_;
    const IndexRange pr = candidate_range(b.min.x, b.max.x, w_.extent.height, w_.cells.rows);
    const IndexRange qr = candidate_range(b.min.y, b.max.y, w_.extent.width, w_.cells.cols);
    for (int p = pr.first; p <= pr.last; ++p) {
      const double x0 = cell_lower_x(w_, p);
      const double x1 = cell_lower_x(w_, p + 1);
      for (int q = qr.first; q <= qr.last; ++q) {
        count_test();
        if (polygon_touches_cell(poly, x0, x1, cell_lower_y(w_, q), cell_lower_y(w_, q + 1)))
          entries_.push_back({p, q, MapLabel::Obstacle});
      }
    }
  }

  InfoMap finish(MapFrame frame) {
    std::sort(entries_.begin(), entries_.end(), [](const MapCell& a, const MapCell& b) {
      if (a.p != b.p) return a.p < b.p;
      if (a.q != b.q) return a.q < b.q;
      return a.label < b.label;
    });
    const auto last = std::unique(entries_.begin(), entries_.end(),
                                  [](const MapCell& a, const MapCell& b) { return a.p == b.p && a.q == b.q; });
    entries_.erase(last, entries_.end());
    if (stats_) stats_->entries_emitted += entries_.size();

    InfoMap map;
    map.dims = w_.cells;
    map.frame = frame;
    map.center = w_.center;
    map.cells = std::move(entries_);
    map.clipped_entities = clipped_;
    return map;
  }

 private:
  void count_test() {
    if (stats_) ++stats_->cells_tested;
  }

  const MapWindow& w_;
  RasterStats* stats_;
  std::vector<MapCell> entries_;
  int clipped_ = 0;
};

MapScene scene_for(const WorldState& world, int agent, Vec2 center, std::vector<ConvexPolygon>& shifted) {
  if (agent < 0 || agent >= static_cast<int>(world.agents.size()))
    throw InputError("map: agent index out of range");
  const AgentState& self = world.agents[static_cast<std::size_t>(agent)];
  MapScene scene;
  scene.radius = world.config.robot_radius_m;
  scene.self = self.position - center;
  scene.goal = self.goal - center;
  for (std::size_t j = 0; j < world.agents.size(); ++j) {
    if (static_cast<int>(j) == agent || !world.agents[j].active()) continue;
    scene.others.push_back(world.agents[j].position - center);
  }
  const bool shift = center.x != 0.0 || center.y != 0.0;
  shifted.clear();
  if (shift) {
    shifted.reserve(world.obstacles.size());
    for (const Obstacle& ob : world.obstacles) shifted.push_back(ob.shape.translated(-center));
    for (const ConvexPolygon& p : shifted) scene.obstacles.push_back(&p);
  } else {
    for (const Obstacle& ob : world.obstacles) scene.obstacles.push_back(&ob.shape);
  }
  return scene;
}

}  // namespace

InfoMap rasterize(const MapWindow& window, const MapScene& scene, MapFrame frame, RasterStats* stats) {
  if (window.cells.rows < 1 || window.cells.cols < 1) throw InputError("map: grid must be at least 1x1");
  Rasterizer r(window, stats);
  r.disc(scene.self, scene.radius, MapLabel::Self);
  for (const Vec2& o : scene.others) r.disc(o, scene.radius, MapLabel::OtherRobot);
  r.disc(scene.goal, scene.radius, MapLabel::Goal);
  for (const ConvexPolygon* poly : scene.obstacles) r.polygon(*poly);
  return r.finish(frame);
}

InfoMap rasterize_global(const WorldState& world, int agent, RasterStats* stats) {
  const MapWindow window{world.config.global_extent_m, world.config.map_cells, {0.0, 0.0}};
  std::vector<ConvexPolygon> shifted;
  const MapScene scene = scene_for(world, agent, window.center, shifted);
  return rasterize(window, scene, MapFrame::GlobalWorld, stats);
}

InfoMap rasterize_local(const WorldState& world, int agent, RasterStats* stats) {
  if (agent < 0 || agent >= static_cast<int>(world.agents.size()))
    throw InputError("map: agent index out of range");
  const Vec2 center = world.agents[static_cast<std::size_t>(agent)].position;
  const MapWindow window{world.config.local_extent_m, world.config.map_cells, center};
  std::vector<ConvexPolygon> shifted;
  MapScene scene = scene_for(world, agent, center, shifted);

  // Entities entirely outside the window are omitted up front.
  const double hx = window.extent.height / 2;
  const double hy = window.extent.width / 2;
  const double r = scene.radius;
  auto outside_disc = [&](Vec2 c) { return c.x + r <= -hx || c.x - r > hx || c.y + r <= -hy || c.y - r > hy; };
  std::erase_if(scene.others, outside_disc);
  std::erase_if(scene.obstacles, [&](const ConvexPolygon* p) {
    const Aabb& b = p->bounds();
    return b.max.x <= -hx || b.min.x > hx || b.max.y <= -hy || b.min.y > hy;
  });
  return rasterize(window, scene, MapFrame::LocalAgent, stats);
}

std::vector<std::uint8_t> densify(const InfoMap& map) {
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(map.dims.rows) * map.dims.cols, 0);
  for (const MapCell& c : map.cells)
    grid[static_cast<std::size_t>(c.p - 1) * map.dims.cols + (c.q - 1)] = static_cast<std::uint8_t>(c.label);
  return grid;
}

void densify_into(const InfoMap& map, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(map.dims.rows) * map.dims.cols)
    throw InputError("densify_into: output size does not match map dims");
  std::fill(out.begin(), out.end(), 0.0);
  for (const MapCell& c : map.cells)
    out[static_cast<std::size_t>(c.p - 1) * map.dims.cols + (c.q - 1)] = static_cast<double>(c.label);
}

InfoMap sparsify(std::span<const std::uint8_t> grid, GridSize dims, MapFrame frame) {
  if (grid.size() != static_cast<std::size_t>(dims.rows) * dims.cols)
    throw InputError("sparsify: grid size does not match dims");
  InfoMap map;
  map.dims = dims;
  map.frame = frame;
  for (int p = 1; p <= dims.rows; ++p) {
    for (int q = 1; q <= dims.cols; ++q) {
      const std::uint8_t v = grid[static_cast<std::size_t>(p - 1) * dims.cols + (q - 1)];
      if (v > 4) throw InputError("sparsify: label outside 0..4");
      if (v != 0) map.cells.push_back({p, q, static_cast<MapLabel>(v)});
    }
  }
  return map;
}

void write_map_pgm(const InfoMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << "P5\n" << map.dims.cols << ' ' << map.dims.rows << "\n255\n";
  std::vector<std::uint8_t> grid = densify(map);
  for (std::uint8_t& v : grid) v = static_cast<std::uint8_t>(v * 51);
  out.write(reinterpret_cast<const char*>(grid.data()), static_cast<std::streamsize>(grid.size()));
}

}  // namespace mapnav
