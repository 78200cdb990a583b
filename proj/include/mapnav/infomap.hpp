#ifndef MAPNAV_INFOMAP_HPP_
#define MAPNAV_INFOMAP_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mapnav/world_state.hpp"

namespace mapnav {

/// Cell labels. Lower values win when several entities touch one cell.
enum class MapLabel : std::uint8_t {
  Background = 0,
  Self = 1,
  OtherRobot = 2,
  Goal = 3,
  Obstacle = 4,
};

/// One non-background cell. Rows p and columns q are 1-based.
struct MapCell {
  int p = 0;
  int q = 0;
  MapLabel label = MapLabel::Background;

  bool operator==(const MapCell&) const = default;
};

enum class MapFrame { GlobalWorld, LocalAgent };

/// Sparse label map: cells sorted by (p, q), at most one entry per cell,
/// absent cells are background.
struct InfoMap {
  GridSize dims;
  MapFrame frame = MapFrame::GlobalWorld;
  Vec2 center;  // world point mapped to the grid center
  std::vector<MapCell> cells;
  int clipped_entities = 0;  // entities not fully inside the extent

  MapLabel at(int p, int q) const;
  bool operator==(const InfoMap& o) const { return dims.rows == o.dims.rows && dims.cols == o.dims.cols && cells == o.cells; }
};

/// Region covered by the map: cell (p, q) spans
/// (c.x + (p-1)H/h - H/2, c.x + pH/h - H/2] x (c.y + (q-1)W/w - W/2, c.y + qW/w - W/2].
struct MapWindow {
  Extent extent;
  GridSize cells;
  Vec2 center;
};

struct RasterStats {
  std::size_t cells_tested = 0;
  std::size_t entries_emitted = 0;
};

/// Lower x bound of row p (upper bound is lower(p + 1)); coordinates are
/// relative to the window center.
double cell_lower_x(const MapWindow& window, int p);
double cell_lower_y(const MapWindow& window, int q);

/// Non-empty intersection between the closed disc and the half-open cell.
bool disc_touches_cell(Vec2 center, double radius, double x0, double x1, double y0, double y1);
/// Non-empty intersection between the closed polygon and the half-open cell.
bool polygon_touches_cell(const ConvexPolygon& poly, double x0, double x1, double y0, double y1);

/// Entities drawn into a map, in window-relative coordinates.
struct MapScene {
  Vec2 self;
  std::vector<Vec2> others;
  Vec2 goal;
  std::vector<const ConvexPolygon*> obstacles;
  double radius = 0.0;
};

InfoMap rasterize(const MapWindow& window, const MapScene& scene, MapFrame frame,
                  RasterStats* stats = nullptr);

/// World-frame map of size (H, W) centered on the world origin.
InfoMap rasterize_global(const WorldState& world, int agent, RasterStats* stats = nullptr);
/// Axis-aligned map of size (H_l, W_l) centered on the agent.
InfoMap rasterize_local(const WorldState& world, int agent, RasterStats* stats = nullptr);

/// Row-major h x w label grid, index (p-1)*w + (q-1).
std::vector<std::uint8_t> densify(const InfoMap& map);
/// Writes labels as reals into `out` (size h*w).
void densify_into(const InfoMap& map, std::span<double> out);
InfoMap sparsify(std::span<const std::uint8_t> grid, GridSize dims, MapFrame frame = MapFrame::GlobalWorld);

/// 8-bit binary PGM, label * 51 gray levels, row p is image row p.
void write_map_pgm(const InfoMap& map, const std::string& path);

}  // namespace mapnav

#endif  // MAPNAV_INFOMAP_HPP_
