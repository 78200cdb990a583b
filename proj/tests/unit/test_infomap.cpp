#include <doctest.h>

#include "mapnav/infomap.hpp"
#include "mapnav/rng.hpp"
#include "oracles.hpp"

using namespace mapnav;

namespace {

WorldState one_agent(Vec2 p, Vec2 goal) {
  WorldState w;
  AgentState a;
  a.position = p;
  a.goal = goal;
  w.agents.push_back(a);
  return w;
}

}  // namespace

TEST_CASE("global map of an empty world") {
  WorldState w = one_agent({0, 0}, {0, 0});
  w.agents[0].status = AgentStatus::Arrived;
  w.agents[0].goal = {1000, 1000};  // outside the extent
  const InfoMap m = rasterize_global(w, 0);
  // Self is always drawn; nothing else is.
  for (const MapCell& c : m.cells) CHECK(c.label == MapLabel::Self);
}

TEST_CASE("agent at (0.1, 0.1) with 2 m cells") {
  // The bounding box [-0.02, 0.22]^2 spans rows and columns 125 and 126, but
  // the corner (0, 0) of cell (125, 125) is 0.141 m from the center, beyond R.
  const WorldState w = one_agent({0.1, 0.1}, {1000, 1000});
  const InfoMap m = rasterize_global(w, 0);
  REQUIRE(m.cells.size() == 3);
  CHECK(m.at(125, 125) == MapLabel::Background);
  CHECK(m.at(125, 126) == MapLabel::Self);
  CHECK(m.at(126, 125) == MapLabel::Self);
  CHECK(m.at(126, 126) == MapLabel::Self);
  CHECK(densify(m) == oracle::raster(w, 0, w.config.global_extent_m, w.config.map_cells, {0, 0}));
  // Moved so the corner lies inside the disc, all four cells are touched.
  const InfoMap m4 = rasterize_global(one_agent({0.05, 0.05}, {1000, 1000}), 0);
  CHECK(m4.cells.size() == 4);
  CHECK(m.clipped_entities == 1);  // the goal lies outside
}

TEST_CASE("self outranks its goal in a shared cell") {
  const WorldState w = one_agent({5.0, 5.0}, {5.3, 5.3});
  const InfoMap m = rasterize_global(w, 0);
  const auto grid = densify(m);
  const auto oracle_grid = oracle::raster(w, 0, w.config.global_extent_m, w.config.map_cells, {0, 0});
  CHECK(grid == oracle_grid);
  CHECK(m.at(128, 128) == MapLabel::Self);
}

TEST_CASE("cell boundaries are half-open") {
  // Cells of 1 m: cell p spans (p - 1 - 5, p - 5]. A disc whose rightmost
  // point is exactly x = 0 touches row 5 but not row 6.
  WorldState w;
  w.config.global_extent_m = {10, 10};
  w.config.map_cells = {10, 10};
  w.config.local_extent_m = {10, 10};
  AgentState a;
  a.position = {-0.12, 0.5};
  a.goal = {100, 100};
  w.agents.push_back(a);
  const InfoMap m = rasterize_global(w, 0);
  CHECK(m.at(5, 6) == MapLabel::Self);
  CHECK(m.at(6, 6) == MapLabel::Background);
  CHECK(densify(m) == oracle::raster(w, 0, w.config.global_extent_m, w.config.map_cells, {0, 0}));
}

TEST_CASE("local map clips distant robots") {
  WorldState w = one_agent({0, 0}, {1, 0});
  AgentState far;
  far.position = {200, 0};
  w.agents.push_back(far);
  const InfoMap local = rasterize_local(w, 0);
  for (const MapCell& c : local.cells) CHECK(c.label != MapLabel::OtherRobot);
  // The same robot inside the 500 m global extent is drawn there.
  bool seen = false;
  for (const MapCell& c : rasterize_global(w, 0).cells) seen = seen || c.label == MapLabel::OtherRobot;
  CHECK(seen);
}

TEST_CASE("rasterizers agree with the brute-force oracle on random worlds") {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    WorldConfig cfg;
    cfg.map_cells = {32, 40};
    cfg.global_extent_m = {12, 15};
    cfg.local_extent_m = {6, 7.5};
    const WorldState w = oracle::random_world(rng, cfg, 8, 4);
    const int a = static_cast<int>(rng.index(w.agents.size()));
    CHECK(densify(rasterize_global(w, a)) == oracle::raster(w, a, cfg.global_extent_m, cfg.map_cells, {0, 0}));
    CHECK(densify(rasterize_local(w, a)) ==
          oracle::raster(w, a, cfg.local_extent_m, cfg.map_cells, w.agents[a].position));
  }
}

TEST_CASE("densify and sparsify") {
  InfoMap empty;
  empty.dims = {4, 5};
  CHECK(densify(empty) == std::vector<std::uint8_t>(20, 0));

  InfoMap one = empty;
  one.cells.push_back({1, 1, MapLabel::Obstacle});
  const auto g = densify(one);
  CHECK(std::count_if(g.begin(), g.end(), [](std::uint8_t v) { return v != 0; }) == 1);
  CHECK(g[0] == 4);

  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const GridSize dims{1 + static_cast<int>(rng.index(12)), 1 + static_cast<int>(rng.index(12))};
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(dims.rows) * dims.cols);
    for (auto& v : grid) v = rng.uniform() < 0.7 ? 0 : static_cast<std::uint8_t>(1 + rng.index(4));
    const InfoMap m = sparsify(grid, dims);
    CHECK(densify(m) == grid);
    CHECK(std::is_sorted(m.cells.begin(), m.cells.end(),
                         [](const MapCell& a, const MapCell& b) { return std::pair(a.p, a.q) < std::pair(b.p, b.q); }));
  }
}

TEST_CASE("disc and polygon cell predicates match the oracle") {
  Rng rng(21);
  const ConvexPolygon poly = ConvexPolygon::rotated_rectangle({0.3, -0.2}, 0.7, 0.4, 0.6);
  for (int i = 0; i < 20000; ++i) {
    const double x0 = std::round(rng.uniform(-2, 2) * 4) / 4, y0 = std::round(rng.uniform(-2, 2) * 4) / 4;
    const double x1 = x0 + 0.25, y1 = y0 + 0.25;
    const Vec2 c{std::round(rng.uniform(-2, 2) * 8) / 8, std::round(rng.uniform(-2, 2) * 8) / 8};
    const double r = rng.uniform() < 0.3 ? 0.125 : rng.uniform(0.05, 0.3);
    CHECK(disc_touches_cell(c, r, x0, x1, y0, y1) == oracle::disc_meets_cell(c.x, c.y, r, x0, x1, y0, y1));
    CHECK(polygon_touches_cell(poly, x0, x1, y0, y1) == oracle::polygon_meets_cell(poly.vertices(), x0, x1, y0, y1));
  }
}
