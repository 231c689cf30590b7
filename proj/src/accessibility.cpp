#include "feedacc/accessibility.hpp"

#include <algorithm>
#include <exception>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"

namespace feedacc {

Router::Router(const TimeExpandedGraph& graph, const Grid& grid)
    : graph_(graph), grid_(grid), stop_to_cells_(graph.stops().size()) {
  const WalkParams& walk = graph.walk();
  for (std::size_t s = 0; s < graph.stops().size(); ++s) {
    const Point& p = graph.stops()[s].location;
    for (const auto& c : grid.cells()) {
      const Seconds w = walk.walk_seconds(distance(p, c.centroid));
      if (walk.within_reach(w)) stop_to_cells_[s].emplace_back(c.id, w);
    }
  }
}

ArrivalProfile Router::earliest_arrival(const Point& origin, Seconds depart_t,
                                        Seconds horizon) const {
  Scratch scratch;
  return earliest_arrival(origin, depart_t, horizon, scratch);
}

ArrivalProfile Router::earliest_arrival(const Point& origin, Seconds depart_t, Seconds horizon,
                                        Scratch& scratch) const {
  const WalkParams& walk = graph_.walk();
  const std::int64_t limit64 =
      horizon == kUnreachable ? kUnreachable : std::int64_t{depart_t} + horizon;
  const auto limit = static_cast<Seconds>(std::min<std::int64_t>(limit64, kUnreachable - 1));

  const auto& nodes = graph_.nodes();
  scratch.reached.resize(nodes.size(), 0);
  scratch.stop_arrival.assign(graph_.stops().size(), kUnreachable);
  scratch.stack.clear();
  scratch.touched.clear();

  auto mark = [&](NodeId id) {
    auto& flag = scratch.reached[static_cast<std::size_t>(id)];
    if (flag) return;
    flag = 1;
    scratch.touched.push_back(id);
    scratch.stack.push_back(id);
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.kind == NodeKind::Arrival) {
      auto& best = scratch.stop_arrival[static_cast<std::size_t>(n.stop)];
      best = std::min(best, n.time);
    }
  };

  // Walk from the origin to nearby stops and board anything leaving later.
  for (std::size_t s = 0; s < graph_.stops().size(); ++s) {
    const Seconds w = walk.walk_seconds(distance(origin, graph_.stops()[s].location));
    if (!walk.within_reach(w)) continue;
    const Seconds ready = depart_t + w;
    const auto deps = graph_.departures_at(static_cast<StopIndex>(s));
    auto it = std::lower_bound(deps.begin(), deps.end(), ready,
                               [&](NodeId d, Seconds t) { return graph_.node(d).time < t; });
    for (; it != deps.end() && graph_.node(*it).time <= limit; ++it) mark(*it);
  }

  while (!scratch.stack.empty()) {
    const NodeId id = scratch.stack.back();
    scratch.stack.pop_back();
    for (const Edge& e : graph_.out_edges(id))
      if (graph_.node(e.to).time <= limit) mark(e.to);
  }
  for (NodeId id : scratch.touched) scratch.reached[static_cast<std::size_t>(id)] = 0;

  ArrivalProfile profile;
  profile.depart_t = depart_t;
  profile.arrivals.assign(grid_.size(), kUnreachable);
  for (const auto& c : grid_.cells()) {
    const Seconds w = walk.walk_seconds(distance(origin, c.centroid));
    if (walk.within_reach(w)) profile.arrivals[static_cast<std::size_t>(c.id)] = depart_t + w;
  }
  for (std::size_t s = 0; s < scratch.stop_arrival.size(); ++s) {
    const Seconds at = scratch.stop_arrival[s];
    if (at == kUnreachable) continue;
    for (const auto& [cell, w] : stop_to_cells_[s]) {
      auto& best = profile.arrivals[static_cast<std::size_t>(cell)];
      best = std::min(best, at + w);
    }
  }
  for (auto& a : profile.arrivals)
    if (a != kUnreachable && a > limit) a = kUnreachable;

  if (auto cell = grid_.try_locate(origin)) {
    profile.origin = *cell;
    profile.arrivals[static_cast<std::size_t>(*cell)] = depart_t;
  }
  return profile;
}

ArrivalProfile earliest_arrival(const TimeExpandedGraph& graph, const Point& origin,
                                Seconds depart_t, const Grid& grid) {
  return Router(graph, grid).earliest_arrival(origin, depart_t);
}

AccessibilityScore accessibility_score(const ArrivalProfile& profile, const Grid& grid,
                                       Seconds tau) {
  if (tau < 0) throw InvalidParameter("tau must be non-negative");
  AccessibilityScore s;
  s.origin = profile.origin;
  s.depart_t = profile.depart_t;
  s.tau = tau;
  const std::int64_t deadline = std::int64_t{profile.depart_t} + tau;
  for (std::size_t c = 0; c < profile.arrivals.size(); ++c) {
    const Seconds a = profile.arrivals[c];
    if (a == kUnreachable || a > deadline) continue;
    s.score += grid.cells()[c].opportunities;
    ++s.reachable_cells;
  }
  return s;
}

namespace {

void check_period(const Period& period, Seconds step) {
  if (step <= 0) throw InvalidParameter("sample step must be positive");
  if (period.start < 0 || period.end <= period.start)
    throw InvalidParameter(fmt::format("invalid period [{}, {})", period.start, period.end));
  if ((period.end - period.start) % step != 0)
    throw InvalidParameter(fmt::format("sample step {} s does not divide period '{}'", step, period.name));
}

CellPeriodScore score_origin(const Router& router, const Cell& origin, const Period& period,
                             Seconds step, Seconds tau, Router::Scratch& scratch) {
  std::int64_t score_sum = 0;
  std::int64_t reach_sum = 0;
  std::int64_t samples = 0;
  for (Seconds t = period.start; t < period.end; t += step) {
    const auto profile = router.earliest_arrival(origin.centroid, t, tau, scratch);
    const auto s = accessibility_score(profile, router.grid(), tau);
    score_sum += s.score;
    reach_sum += static_cast<std::int64_t>(s.reachable_cells);
    ++samples;
  }
  return {origin.id, static_cast<double>(score_sum) / static_cast<double>(samples),
          static_cast<double>(reach_sum) / static_cast<double>(samples)};
}

}  // namespace

std::vector<CellPeriodScore> score_period_serial(const Router& router, const Period& period,
                                                 Seconds sample_step, Seconds tau) {
  check_period(period, sample_step);
  std::vector<CellPeriodScore> out;
  out.reserve(router.grid().size());
  Router::Scratch scratch;
  for (const auto& c : router.grid().cells())
    out.push_back(score_origin(router, c, period, sample_step, tau, scratch));
  return out;
}

std::vector<CellPeriodScore> score_period(const Router& router, const Period& period,
                                          Seconds sample_step, Seconds tau, int workers) {
  check_period(period, sample_step);
  const auto& cells = router.grid().cells();
  std::vector<CellPeriodScore> out(cells.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  std::exception_ptr failure;

#pragma omp parallel num_threads(threads)
  {
    Router::Scratch scratch;
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = score_origin(
            router, cells[static_cast<std::size_t>(i)], period, sample_step, tau, scratch);
      } catch (...) {
#pragma omp critical(feedacc_score_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::map<CellId, double> improvement(const std::map<CellId, double>& base,
                                     const std::map<CellId, double>& augmented) {
  if (base.size() != augmented.size())
    throw InvalidParameter("base and augmented scores cover different cells");
  std::map<CellId, double> delta;
  for (const auto& [cell, score] : base) {
    const auto it = augmented.find(cell);
    if (it == augmented.end())
      throw InvalidParameter(fmt::format("cell {} missing from augmented scores", cell));
    delta.emplace(cell, it->second - score);
  }
  return delta;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const PeriodScores> scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"cell_id", "period", "score", "reachable_cells"});
  for (const auto& ps : scores)
    for (const auto& s : ps.scores)
      write_csv_row(out, {std::to_string(s.cell), ps.period.name, fmt::format("{}", s.score),
                          fmt::format("{}", s.reachable_cells)});
}

std::map<std::string, std::map<CellId, double>> read_scores_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_cell = t.require("cell_id");
  const auto c_period = t.require("period");
  const auto c_score = t.require("score");
  std::map<std::string, std::map<CellId, double>> out;
  for (const auto& r : t.rows())
    out[r[c_period]][static_cast<CellId>(parse_int(r[c_cell], "cell_id"))] =
        parse_double(r[c_score], "score");
  return out;
}

void write_cell_values_geojson(const std::filesystem::path& path, const Grid& grid,
                               const Projection& proj, const std::map<CellId, double>& values,
                               const std::string& property) {
  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  auto& features = fc["features"] = nlohmann::ordered_json::array();
  for (const auto& [cell, value] : values) {
    auto ring = nlohmann::ordered_json::array();
    const auto hex = grid.hexagon(cell);
    for (std::size_t k = 0; k <= hex.size(); ++k) {
      const Point g = proj.inverse(hex[k % hex.size()]);
      ring.push_back({g.x, g.y});
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
                        {"properties", {{"cell_id", cell}, {property, value}}}});
  }
  std::ofstream out(path);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  out << fc.dump() << '\n';
}

}  // namespace feedacc
