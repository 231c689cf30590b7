#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "feedacc/error.hpp"
#include "feedacc/tessellation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace feedacc;

namespace {

Point lattice(const BBox& box, double s, int col, int row) {
  const double x = box.min.x + 1.5 * s * col;
  const double y = box.min.y + std::sqrt(3.0) * s * (row + ((col % 2 + 2) % 2 ? 0.5 : 0.0));
  return {x, y};
}

BBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-5000, 5000), ext(1, 8000);
  const Point lo{pos(rng), pos(rng)};
  return {lo, {lo.x + ext(rng), lo.y + ext(rng)}};
}

}  // namespace

TEST(Tessellate, CellSetMatchesTouchOracle) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 40; ++iter) {
    const BBox box = random_box(rng);
    const double s = std::uniform_real_distribution<double>(200, 1500)(rng);
    const Grid g = tessellate(box, s);

    std::set<std::pair<int, int>> expected;
    const int cmax = static_cast<int>((box.max.x - box.min.x) / (1.5 * s)) + 3;
    const int rmax = static_cast<int>((box.max.y - box.min.y) / (std::sqrt(3.0) * s)) + 3;
    for (int c = -3; c <= cmax; ++c)
      for (int r = -3; r <= rmax; ++r)
        if (oracle::polygon_touches_box(oracle::hexagon(lattice(box, s, c, r), s), box, 1e-7 * s))
          expected.insert({c, r});

    std::set<std::pair<int, int>> got;
    for (const auto& cell : g.cells()) got.insert({cell.col, cell.row});
    EXPECT_EQ(got, expected) << "iteration " << iter;
  }
}

TEST(Tessellate, IdsDenseAndOrdered) {
  const Grid g = tessellate({{0, 0}, {7300, 4100}}, 1000);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g.cells()[i].id, static_cast<CellId>(i));
    if (i > 0) {
      const auto& a = g.cells()[i - 1];
      const auto& b = g.cells()[i];
      EXPECT_TRUE(a.col < b.col || (a.col == b.col && a.row < b.row));
    }
  }
}

TEST(Tessellate, UnionCoversBox) {
  std::mt19937_64 rng(5);
  const BBox box{{100, 200}, {6100, 4700}};
  const Grid g = tessellate(box, 800);
  std::uniform_real_distribution<double> ux(box.min.x, box.max.x), uy(box.min.y, box.max.y);
  for (int i = 0; i < 2000; ++i) {
    const Point p{ux(rng), uy(rng)};
    bool inside = false;
    for (const auto& c : g.cells()) {
      const auto h = g.hexagon(c.id);
      if (oracle::point_in_convex({h.begin(), h.end()}, p, 1e-6)) {
        inside = true;
        break;
      }
    }
    EXPECT_TRUE(inside);
  }
}

TEST(Tessellate, HexagonVerticesMatchGeometry) {
  const Grid g = tessellate({{0, 0}, {3000, 3000}}, 1000);
  for (const auto& c : g.cells()) {
    const auto h = g.hexagon(c.id);
    const auto ref = oracle::hexagon(c.centroid, 1000);
    for (int k = 0; k < 6; ++k) {
      EXPECT_NEAR(h[k].x, ref[k].x, 1e-6);
      EXPECT_NEAR(h[k].y, ref[k].y, 1e-6);
    }
  }
}

TEST(Tessellate, RejectsNonPositiveSide) {
  EXPECT_THROW(tessellate({{0, 0}, {10, 10}}, 0), InvalidParameter);
  EXPECT_THROW(tessellate({{0, 0}, {10, 10}}, -1), InvalidParameter);
}

TEST(Tessellate, DegenerateBoxGivesOneCell) {
  const Grid g = tessellate({{5, 5}, {5, 5}}, 1000);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.cells()[0].centroid, (Point{5, 5}));
}

TEST(Locate, MatchesNearestCentroidScan) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 10; ++iter) {
    const BBox box = random_box(rng);
    const double s = std::uniform_real_distribution<double>(300, 1200)(rng);
    const Grid g = tessellate(box, s);
    const BBox outer = box.expanded(s);
    std::uniform_real_distribution<double> ux(outer.min.x, outer.max.x), uy(outer.min.y, outer.max.y);
    for (int i = 0; i < 500; ++i) {
      const Point p{ux(rng), uy(rng)};
      CellId best = -1;
      double bd = 0;
      for (const auto& c : g.cells()) {
        const double d = squared_distance(p, c.centroid);
        if (best < 0 || d < bd) {
          best = c.id;
          bd = d;
        }
      }
      const CellId got = g.locate(p);
      EXPECT_NEAR(squared_distance(p, g.cell(got).centroid), bd, 1e-9 * s * s);
      if (std::abs(squared_distance(p, g.cell(got).centroid) - bd) > 1e-6) EXPECT_EQ(got, best);
    }
  }
}

TEST(Locate, TiesGoToLowestId) {
  const Grid g = tessellate({{0, 0}, {4000, 4000}}, 1000);
  // Midpoint between two vertically adjacent centroids of column 0.
  const Point a = g.lattice_centroid(0, 1), b = g.lattice_centroid(0, 2);
  const Point mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
  const CellId got = g.locate(mid);
  EXPECT_EQ(g.cell(got).col, 0);
  EXPECT_EQ(g.cell(got).row, 1);
}

TEST(Locate, OutsideExpandedBoxThrows) {
  const Grid g = tessellate({{0, 0}, {2000, 2000}}, 500);
  EXPECT_THROW(g.locate({-501, 100}), OutOfBounds);
  EXPECT_THROW(g.locate({100, 2600}), OutOfBounds);
  EXPECT_FALSE(g.try_locate({5000, 5000}).has_value());
  EXPECT_NO_THROW(g.locate({-400, 100}));
}

TEST(Locate, CentroidsLocateThemselves) {
  const Grid g = tessellate({{0, 0}, {9000, 6000}}, 700);
  for (const auto& c : g.cells()) EXPECT_EQ(g.locate(c.centroid), c.id);
}

TEST(Opportunities, CountsAndOutOfBounds) {
  Grid g = tessellate({{0, 0}, {3000, 3000}}, 1000);
  std::vector<Point> people{{0, 0}, {10, 10}, {1500, 1500}, {99999, 0}};
  const auto n = assign_opportunities(g, people);
  EXPECT_EQ(n.located, 3u);
  EXPECT_EQ(n.out_of_bounds, 1u);
  EXPECT_EQ(g.total_opportunities(), 3);
  EXPECT_EQ(g.cell(g.locate({0, 0})).opportunities, 2);
}

TEST(GridJson, RoundTrip) {
  const auto dir = testutil::scratch_dir("grid_json");
  Grid g = tessellate({{0, 0}, {5000, 3000}}, 900);
  g.set_opportunities(3, 17);
  const Projection proj(2.2, 48.7);
  write_grid_json(dir / "g.json", g, proj);
  Projection back;
  const Grid h = read_grid_json(dir / "g.json", &back);
  ASSERT_EQ(h.size(), g.size());
  EXPECT_EQ(h.side(), g.side());
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(h.cells()[i].centroid, g.cells()[i].centroid);
    EXPECT_EQ(h.cells()[i].opportunities, g.cells()[i].opportunities);
  }
  EXPECT_FALSE(back.is_metric());
  EXPECT_EQ(back.lon0(), 2.2);
  EXPECT_EQ(back.lat0(), 48.7);
}

TEST(Projection, RoundTripsNearCenter) {
  const Projection p(2.17, 48.71);
  const Point m = p.forward(2.2, 48.75);
  const Point g = p.inverse(m);
  EXPECT_NEAR(g.x, 2.2, 1e-12);
  EXPECT_NEAR(g.y, 48.75, 1e-12);
  // One degree of latitude is about 111.2 km.
  EXPECT_NEAR(p.forward(2.17, 49.71).y, 111195.08, 1.0);
}
