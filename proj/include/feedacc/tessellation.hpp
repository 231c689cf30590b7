#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "feedacc/geometry.hpp"

namespace feedacc {

using CellId = std::int32_t;

inline constexpr double kDefaultHexSide = 1000.0;

struct Cell {
  CellId id = 0;
  Point centroid;
  double side = 0.0;
  std::int64_t opportunities = 0;
  // Lattice coordinates (flat-top, odd columns shifted up by half a row).
  int col = 0;
  int row = 0;
};

/// Regular flat-top hexagonal tessellation of a bounding box. The lattice is
/// anchored so that cell (0, 0) is centered on the bbox lower-left corner;
/// the grid holds every lattice cell whose hexagon touches the bbox. Ids are
/// dense and ordered by (col, row).
class Grid {
 public:
  Grid() = default;
  /// Rebuilds a grid from serialized cells; validates lattice consistency.
  Grid(BBox bbox, double side, std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(CellId id) const { return cells_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return cells_.size(); }
  const BBox& bbox() const { return bbox_; }
  double side() const { return side_; }

  /// Nearest centroid (hexagonal Voronoi); ties go to the lowest id.
  /// Throws OutOfBounds when p lies outside the bbox expanded by one side.
  CellId locate(const Point& p) const;
  std::optional<CellId> try_locate(const Point& p) const;

  /// Hexagon vertices, counter-clockwise from the east vertex.
  std::array<Point, 6> hexagon(CellId id) const;

  std::int64_t total_opportunities() const;
  void set_opportunities(CellId id, std::int64_t count);

  /// Centroid of lattice position (col, row) for this grid's anchor.
  Point lattice_centroid(int col, int row) const;

 private:
  void build_index();
  std::optional<CellId> lookup(int col, int row) const;
  CellId nearest_among_all(const Point& p) const;

  BBox bbox_;
  double side_ = 0.0;
  std::vector<Cell> cells_;
  int col_min_ = 0, col_max_ = -1, row_min_ = 0, row_max_ = -1;
  std::vector<CellId> index_;  // (col, row) -> id or -1
};

Grid tessellate(const BBox& bbox, double side = kDefaultHexSide);

struct OpportunityCount {
  std::size_t located = 0;
  std::size_t out_of_bounds = 0;
};

/// Sets each cell's opportunities to the number of people located in it.
OpportunityCount assign_opportunities(Grid& grid, std::span<const Point> people);

// People/opportunities input: `id,lon,lat` or, for metric inputs, `id,x,y`.
std::vector<Point> read_people(const std::filesystem::path& path, const Projection& proj);
/// Raw (unprojected) coordinates of the people file, for bbox inference.
std::vector<Point> read_people_raw(const std::filesystem::path& path, bool metric);

void write_grid_json(const std::filesystem::path& path, const Grid& grid, const Projection& proj);
Grid read_grid_json(const std::filesystem::path& path, Projection* proj = nullptr);

/// FeatureCollection of hexagons with `cell_id` and `opportunities`.
void write_grid_geojson(const std::filesystem::path& path, const Grid& grid,
                        const Projection& proj);

}  // namespace feedacc
