#include "feedacc/tessellation.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"

namespace feedacc {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;

struct Interval {
  double lo, hi;
};

Interval project_rect(const BBox& b, double nx, double ny) {
  const double c[4] = {b.min.x * nx + b.min.y * ny, b.max.x * nx + b.min.y * ny,
                       b.min.x * nx + b.max.y * ny, b.max.x * nx + b.max.y * ny};
  return {std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]})};
}

// Separating-axis test between a flat-top hexagon and a closed rectangle.
bool hexagon_touches_rect(const Point& c, double side, const BBox& rect) {
  const double h = side * kSqrt3 / 2;
  const double eps = 1e-9 * side;
  struct Axis {
    double nx, ny, half;
  };
  const Axis axes[] = {{1.0, 0.0, side}, {0.0, 1.0, h}, {kSqrt3 / 2, 0.5, h}, {-kSqrt3 / 2, 0.5, h}};
  for (const auto& a : axes) {
    const double center = c.x * a.nx + c.y * a.ny;
    const Interval r = project_rect(rect, a.nx, a.ny);
    if (center + a.half < r.lo - eps || center - a.half > r.hi + eps) return false;
  }
  return true;
}

}  // namespace

Grid::Grid(BBox bbox, double side, std::vector<Cell> cells)
    : bbox_(bbox), side_(side), cells_(std::move(cells)) {
  if (!(side_ > 0.0)) throw InvalidParameter("hexagon side must be positive");
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell& c = cells_[i];
    if (c.id != static_cast<CellId>(i))
      throw FormatError(fmt::format("grid cell ids must be dense, got {} at {}", c.id, i));
    if (c.opportunities < 0) throw FormatError("negative opportunity count");
    if (squared_distance(c.centroid, lattice_centroid(c.col, c.row)) > 1e-6 * side_ * side_)
      throw FormatError(fmt::format("cell {} is off the hexagonal lattice", c.id));
  }
  build_index();
}

Point Grid::lattice_centroid(int col, int row) const {
  const double shift = (col % 2 != 0) ? 0.5 : 0.0;
  return {bbox_.min.x + 1.5 * side_ * col, bbox_.min.y + kSqrt3 * side_ * (row + shift)};
}

void Grid::build_index() {
  index_.clear();
  if (cells_.empty()) return;
  col_min_ = row_min_ = std::numeric_limits<int>::max();
  col_max_ = row_max_ = std::numeric_limits<int>::min();
  for (const auto& c : cells_) {
    col_min_ = std::min(col_min_, c.col);
    col_max_ = std::max(col_max_, c.col);
    row_min_ = std::min(row_min_, c.row);
    row_max_ = std::max(row_max_, c.row);
  }
  const auto width = static_cast<std::size_t>(row_max_ - row_min_ + 1);
  index_.assign(static_cast<std::size_t>(col_max_ - col_min_ + 1) * width, -1);
  for (const auto& c : cells_) {
    auto& slot = index_[static_cast<std::size_t>(c.col - col_min_) * width +
                        static_cast<std::size_t>(c.row - row_min_)];
    if (slot != -1) throw FormatError("duplicate lattice position in grid");
    slot = c.id;
  }
}

std::optional<CellId> Grid::lookup(int col, int row) const {
  if (col < col_min_ || col > col_max_ || row < row_min_ || row > row_max_) return std::nullopt;
  const auto width = static_cast<std::size_t>(row_max_ - row_min_ + 1);
  const CellId id = index_[static_cast<std::size_t>(col - col_min_) * width +
                           static_cast<std::size_t>(row - row_min_)];
  if (id < 0) return std::nullopt;
  return id;
}

CellId Grid::nearest_among_all(const Point& p) const {
  const double tol = 1e-9 * side_ * side_;
  CellId best = -1;
  double best_d = 0.0;
  for (const auto& c : cells_) {
    const double d = squared_distance(p, c.centroid);
    if (best < 0 || d < best_d - tol) {
      best = c.id;
      best_d = d;
    }
  }
  return best;
}

std::optional<CellId> Grid::try_locate(const Point& p) const {
  if (cells_.empty() || !bbox_.expanded(side_).contains(p)) return std::nullopt;
  if (!bbox_.contains(p)) return nearest_among_all(p);

  const double tol = 1e-9 * side_ * side_;
  const double col_step = 1.5 * side_;
  const double row_step = kSqrt3 * side_;
  const int c_lo = static_cast<int>(std::floor((p.x - bbox_.min.x - side_) / col_step));
  const int c_hi = static_cast<int>(std::ceil((p.x - bbox_.min.x + side_) / col_step));

  CellId best = -1;
  double best_d = 0.0;
  for (int col = c_lo; col <= c_hi; ++col) {
    const double shift = (col % 2 != 0) ? 0.5 : 0.0;
    const double r = (p.y - bbox_.min.y) / row_step - shift;
    for (int row = static_cast<int>(std::floor(r)) - 1; row <= static_cast<int>(std::ceil(r)) + 1;
         ++row) {
      const auto id = lookup(col, row);
      if (!id) continue;
      const double d = squared_distance(p, cells_[static_cast<std::size_t>(*id)].centroid);
      // Candidates are visited in ascending id order, so ties keep the lowest.
      if (best < 0 || d < best_d - tol) {
        best = *id;
        best_d = d;
      }
    }
  }
  if (best < 0) return nearest_among_all(p);
  return best;
}

CellId Grid::locate(const Point& p) const {
  if (auto id = try_locate(p)) return *id;
  throw OutOfBounds(fmt::format("point ({}, {}) lies outside the tessellated area", p.x, p.y));
}

std::array<Point, 6> Grid::hexagon(CellId id) const {
  const Cell& c = cell(id);
  std::array<Point, 6> v;
  for (int k = 0; k < 6; ++k) {
    const double a = k * (std::numbers::pi / 3.0);
    v[static_cast<std::size_t>(k)] = {c.centroid.x + side_ * std::cos(a),
                                      c.centroid.y + side_ * std::sin(a)};
  }
  return v;
}

std::int64_t Grid::total_opportunities() const {
  return std::accumulate(cells_.begin(), cells_.end(), std::int64_t{0},
                         [](std::int64_t s, const Cell& c) { return s + c.opportunities; });
}

void Grid::set_opportunities(CellId id, std::int64_t count) {
  if (count < 0) throw InvalidParameter("opportunity count must be non-negative");
  cells_.at(static_cast<std::size_t>(id)).opportunities = count;
}

Grid tessellate(const BBox& bbox, double side) {
  if (!(side > 0.0) || !std::isfinite(side))
    throw InvalidParameter(fmt::format("hexagon side must be positive, got {}", side));
  if (!(bbox.max.x >= bbox.min.x) || !(bbox.max.y >= bbox.min.y))
    throw InvalidParameter("bounding box min exceeds max");

  const double col_step = 1.5 * side;
  const double row_step = kSqrt3 * side;
  const double h = row_step / 2;
  const double w = bbox.max.x - bbox.min.x;
  const double ht = bbox.max.y - bbox.min.y;

  const int c_lo = static_cast<int>(std::ceil(-side / col_step)) - 1;
  const int c_hi = static_cast<int>(std::floor((w + side) / col_step)) + 1;
  const int r_lo = static_cast<int>(std::floor((-h) / row_step)) - 2;
  const int r_hi = static_cast<int>(std::ceil((ht + h) / row_step)) + 1;

  Grid probe(bbox, side, {});
  std::vector<Cell> cells;
  for (int col = c_lo; col <= c_hi; ++col) {
    for (int row = r_lo; row <= r_hi; ++row) {
      const Point c = probe.lattice_centroid(col, row);
      if (!hexagon_touches_rect(c, side, bbox)) continue;
      cells.push_back({static_cast<CellId>(cells.size()), c, side, 0, col, row});
    }
  }
  return Grid(bbox, side, std::move(cells));
}

OpportunityCount assign_opportunities(Grid& grid, std::span<const Point> people) {
  std::vector<std::int64_t> counts(grid.size(), 0);
  OpportunityCount result;
  for (const auto& p : people) {
    if (auto id = grid.try_locate(p)) {
      ++counts[static_cast<std::size_t>(*id)];
      ++result.located;
    } else {
      ++result.out_of_bounds;
    }
  }
  for (std::size_t i = 0; i < counts.size(); ++i)
    grid.set_opportunities(static_cast<CellId>(i), counts[i]);
  return result;
}

std::vector<Point> read_people_raw(const std::filesystem::path& path, bool metric) {
  const CsvTable t = read_csv(path);
  const std::size_t ca = t.require(metric ? "x" : "lon");
  const std::size_t cb = t.require(metric ? "y" : "lat");
  std::vector<Point> out;
  out.reserve(t.rows().size());
  for (const auto& r : t.rows())
    out.push_back({parse_double(r[ca], "people coordinate"), parse_double(r[cb], "people coordinate")});
  return out;
}

std::vector<Point> read_people(const std::filesystem::path& path, const Projection& proj) {
  auto raw = read_people_raw(path, proj.is_metric());
  for (auto& p : raw) p = proj.forward(p.x, p.y);
  return raw;
}

void write_grid_json(const std::filesystem::path& path, const Grid& grid, const Projection& proj) {
  nlohmann::ordered_json j;
  j["side"] = grid.side();
  j["bbox"] = {grid.bbox().min.x, grid.bbox().min.y, grid.bbox().max.x, grid.bbox().max.y};
  j["projection"] = {{"metric", proj.is_metric()}, {"lon0", proj.lon0()}, {"lat0", proj.lat0()}};
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : grid.cells())
    cells.push_back({c.id, c.col, c.row, c.centroid.x, c.centroid.y, c.opportunities});
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(1) << '\n';
}

Grid read_grid_json(const std::filesystem::path& path, Projection* proj) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  try {
    const auto j = nlohmann::json::parse(in);
    const double side = j.at("side").get<double>();
    const auto& b = j.at("bbox");
    const BBox bbox{{b.at(0).get<double>(), b.at(1).get<double>()},
                    {b.at(2).get<double>(), b.at(3).get<double>()}};
    if (proj) {
      const auto& pj = j.at("projection");
      *proj = pj.at("metric").get<bool>()
                  ? Projection::metric_identity()
                  : Projection(pj.at("lon0").get<double>(), pj.at("lat0").get<double>());
    }
    std::vector<Cell> cells;
    for (const auto& c : j.at("cells")) {
      cells.push_back({c.at(0).get<CellId>(),
                       {c.at(3).get<double>(), c.at(4).get<double>()},
                       side,
                       c.at(5).get<std::int64_t>(),
                       c.at(1).get<int>(),
                       c.at(2).get<int>()});
    }
    return Grid(bbox, side, std::move(cells));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_grid_geojson(const std::filesystem::path& path, const Grid& grid,
                        const Projection& proj) {
  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  auto& features = fc["features"] = nlohmann::ordered_json::array();
  for (const auto& c : grid.cells()) {
    auto ring = nlohmann::ordered_json::array();
    const auto hex = grid.hexagon(c.id);
    for (std::size_t k = 0; k <= hex.size(); ++k) {
      const Point g = proj.inverse(hex[k % hex.size()]);
      ring.push_back({g.x, g.y});
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
                        {"properties", {{"cell_id", c.id}, {"opportunities", c.opportunities}}}});
  }
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  out << fc.dump() << '\n';
}

}  // namespace feedacc
