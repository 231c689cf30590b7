#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "feedacc/tessellation.hpp"
#include "feedacc/timefmt.hpp"
#include "feedacc/transit_graph.hpp"

namespace feedacc {

inline constexpr Seconds kDefaultTau = 3600;
inline constexpr Seconds kDefaultSampleStep = 600;

/// Earliest arrival at every cell centroid (kUnreachable beyond the horizon).
struct ArrivalProfile {
  CellId origin = -1;  // cell containing the origin point, -1 outside the grid
  Seconds depart_t = 0;
  std::vector<Seconds> arrivals;  // indexed by CellId
};

struct AccessibilityScore {
  CellId origin = -1;
  Seconds depart_t = 0;
  Seconds tau = kDefaultTau;
  std::int64_t score = 0;  // opportunities reachable within tau
  std::size_t reachable_cells = 0;
};

/// Earliest-arrival queries over an immutable graph. Safe to share across
/// threads; each concurrent caller passes its own Scratch.
class Router {
 public:
  struct Scratch {
    std::vector<char> reached;
    std::vector<NodeId> stack;
    std::vector<NodeId> touched;
    std::vector<Seconds> stop_arrival;
  };

  Router(const TimeExpandedGraph& graph, const Grid& grid);

  ArrivalProfile earliest_arrival(const Point& origin, Seconds depart_t,
                                  Seconds horizon = kUnreachable) const;
  ArrivalProfile earliest_arrival(const Point& origin, Seconds depart_t, Seconds horizon,
                                  Scratch& scratch) const;

  const Grid& grid() const { return grid_; }
  const TimeExpandedGraph& graph() const { return graph_; }

 private:
  const TimeExpandedGraph& graph_;
  const Grid& grid_;
  // Cells whose centroid is within walking reach of each stop.
  std::vector<std::vector<std::pair<CellId, Seconds>>> stop_to_cells_;
};

/// One-shot convenience wrapper around Router.
ArrivalProfile earliest_arrival(const TimeExpandedGraph& graph, const Point& origin,
                                Seconds depart_t, const Grid& grid);

AccessibilityScore accessibility_score(const ArrivalProfile& profile, const Grid& grid,
                                       Seconds tau = kDefaultTau);

/// Half-open departure window [start, end).
struct Period {
  std::string name;
  Seconds start = 0;
  Seconds end = 0;
};

struct CellPeriodScore {
  CellId cell = 0;
  double score = 0.0;            // mean over sampled departure times
  double reachable_cells = 0.0;  // mean
};

/// Reference implementation: one origin after another.
std::vector<CellPeriodScore> score_period_serial(const Router& router, const Period& period,
                                                 Seconds sample_step = kDefaultSampleStep,
                                                 Seconds tau = kDefaultTau);
/// OpenMP implementation over origins; bit-identical to the serial one.
std::vector<CellPeriodScore> score_period(const Router& router, const Period& period,
                                          Seconds sample_step = kDefaultSampleStep,
                                          Seconds tau = kDefaultTau, int workers = 0);

/// augmented - base per cell; throws InvalidParameter on mismatched cells.
std::map<CellId, double> improvement(const std::map<CellId, double>& base,
                                     const std::map<CellId, double>& augmented);

// Scores artifact: `cell_id,period,score,reachable_cells`.
struct PeriodScores {
  Period period;
  std::vector<CellPeriodScore> scores;
};
void write_scores_csv(const std::filesystem::path& path, std::span<const PeriodScores> scores);
/// period name -> (cell -> score)
std::map<std::string, std::map<CellId, double>> read_scores_csv(const std::filesystem::path& path);

/// FeatureCollection of hexagons carrying `cell_id` and one numeric property.
void write_cell_values_geojson(const std::filesystem::path& path, const Grid& grid,
                               const Projection& proj, const std::map<CellId, double>& values,
                               const std::string& property);

}  // namespace feedacc
