#include "feedacc/transit_graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"

namespace feedacc {

Seconds WalkParams::walk_seconds(double meters) const {
  const double t = std::ceil(meters / walk_speed - 1e-6);
  return t <= 0.0 ? 0 : static_cast<Seconds>(std::min(t, 1e9));
}

void WalkModel::add_override(StopIndex from, StopIndex to, Seconds walk) {
  if (walk < 0) throw InvalidParameter("walk time must be non-negative");
  overrides_[{from, to}] = walk;
}

void WalkModel::load_matrix(const std::filesystem::path& path, const Schedule& schedule) {
  const CsvTable t = read_csv(path);
  const auto c_from = t.require("from_stop_id");
  const auto c_to = t.require("to_stop_id");
  const auto c_walk = t.require("walk_s");
  for (const auto& r : t.rows()) {
    const auto a = schedule.find_stop(r[c_from]);
    const auto b = schedule.find_stop(r[c_to]);
    if (!a) throw FormatError(fmt::format("{}: unknown stop_id '{}'", path.string(), r[c_from]));
    if (!b) throw FormatError(fmt::format("{}: unknown stop_id '{}'", path.string(), r[c_to]));
    add_override(*a, *b, static_cast<Seconds>(std::ceil(parse_double(r[c_walk], "walk_s") - 1e-6)));
  }
}

Seconds WalkModel::stop_to_stop(const std::vector<Stop>& stops, StopIndex a, StopIndex b) const {
  if (a == b) return 0;
  if (auto it = overrides_.find({a, b}); it != overrides_.end()) return it->second;
  return params_.walk_seconds(distance(stops[static_cast<std::size_t>(a)].location,
                                       stops[static_cast<std::size_t>(b)].location));
}

StopNeighbors WalkModel::neighbors(const std::vector<Stop>& stops) const {
  StopNeighbors out(stops.size());
  const double cell = std::max(params_.reach_meters(), 1.0);
  auto key = [cell](const Point& p) {
    return std::pair<long long, long long>{static_cast<long long>(std::floor(p.x / cell)),
                                           static_cast<long long>(std::floor(p.y / cell))};
  };
  struct PairHash {
    std::size_t operator()(const std::pair<long long, long long>& k) const {
      return std::hash<long long>()(k.first * 73856093LL ^ k.second * 19349663LL);
    }
  };
  std::unordered_map<std::pair<long long, long long>, std::vector<StopIndex>, PairHash> buckets;
  for (std::size_t i = 0; i < stops.size(); ++i)
    buckets[key(stops[i].location)].push_back(static_cast<StopIndex>(i));

  for (std::size_t i = 0; i < stops.size(); ++i) {
    const auto a = static_cast<StopIndex>(i);
    const auto [kx, ky] = key(stops[i].location);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find({kx + dx, ky + dy});
        if (it == buckets.end()) continue;
        for (StopIndex b : it->second) {
          if (a != b && overrides_.contains({a, b})) continue;
          const Seconds w = stop_to_stop(stops, a, b);
          if (params_.within_reach(w)) out[i].emplace_back(b, w);
        }
      }
    }
  }
  for (const auto& [pair, w] : overrides_) {
    if (pair.first == pair.second || !params_.within_reach(w)) continue;
    out[static_cast<std::size_t>(pair.first)].emplace_back(pair.second, w);
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

std::span<const Edge> TimeExpandedGraph::out_edges(NodeId id) const {
  const auto i = static_cast<std::size_t>(id);
  return {edges_.data() + edge_offsets_[i], edge_offsets_[i + 1] - edge_offsets_[i]};
}

std::span<const NodeId> TimeExpandedGraph::departures_at(StopIndex s) const {
  return departures_[static_cast<std::size_t>(s)];
}

std::span<const NodeId> TimeExpandedGraph::arrivals_at(StopIndex s) const {
  return arrivals_[static_cast<std::size_t>(s)];
}

TimeExpandedGraph build_graph(const Schedule& schedule, const WalkModel& walk,
                              const GraphOptions& options) {
  TimeExpandedGraph g;
  g.stops_ = schedule.stops;
  g.walk_ = walk.params();
  g.departures_.resize(g.stops_.size());
  g.arrivals_.resize(g.stops_.size());

  std::vector<Edge> edges;
  for (std::size_t t = 0; t < schedule.trips.size(); ++t) {
    const auto& trip = schedule.trips[t];
    g.trip_ids_.push_back(trip.id);
    const auto trip_idx = static_cast<TripIndex>(t);
    for (std::size_t k = 0; k < trip.stop_times.size(); ++k) {
      const auto& st = trip.stop_times[k];
      const auto arr = static_cast<NodeId>(g.nodes_.size());
      g.nodes_.push_back({st.stop, st.arrival, trip_idx, NodeKind::Arrival});
      g.nodes_.push_back({st.stop, st.departure, trip_idx, NodeKind::Departure});
      edges.push_back({arr, arr + 1, EdgeKind::Dwell});
      if (k > 0) edges.push_back({arr - 1, arr, EdgeKind::Ride});
      g.arrivals_[static_cast<std::size_t>(st.stop)].push_back(arr);
      g.departures_[static_cast<std::size_t>(st.stop)].push_back(arr + 1);
    }
  }
  auto by_time = [&g](NodeId a, NodeId b) {
    const auto ta = g.node(a).time, tb = g.node(b).time;
    return ta != tb ? ta < tb : a < b;
  };
  for (auto& v : g.departures_) std::sort(v.begin(), v.end(), by_time);
  for (auto& v : g.arrivals_) std::sort(v.begin(), v.end(), by_time);

  const StopNeighbors near = walk.neighbors(g.stops_);
  std::vector<NodeId> best(schedule.trips.size(), -1);
  std::vector<TripIndex> touched;
  for (std::size_t n = 0; n < g.nodes_.size(); ++n) {
    const auto& a = g.nodes_[n];
    if (a.kind != NodeKind::Arrival) continue;
    for (const auto& [stop, w] : near[static_cast<std::size_t>(a.stop)]) {
      const Seconds ready = a.time + w + options.transfer_buffer;
      const auto deps = g.departures_at(stop);
      auto it = std::lower_bound(deps.begin(), deps.end(), ready,
                                 [&g](NodeId d, Seconds t) { return g.node(d).time < t; });
      for (; it != deps.end(); ++it) {
        const auto& d = g.node(*it);
        if (d.trip == a.trip) continue;
        if (!options.prune_transfers) {
          edges.push_back({static_cast<NodeId>(n), *it, EdgeKind::Transfer});
          continue;
        }
        NodeId& slot = best[static_cast<std::size_t>(d.trip)];
        if (slot < 0) touched.push_back(d.trip);
        if (slot < 0 || by_time(*it, slot)) slot = *it;
      }
    }
    for (TripIndex t : touched) {
      edges.push_back({static_cast<NodeId>(n), best[static_cast<std::size_t>(t)], EdgeKind::Transfer});
      best[static_cast<std::size_t>(t)] = -1;
    }
    touched.clear();
  }

  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.from != y.from) return x.from < y.from;
    if (x.to != y.to) return x.to < y.to;
    return x.kind < y.kind;
  });
  g.edges_ = std::move(edges);
  g.edge_offsets_.assign(g.nodes_.size() + 1, 0);
  for (const auto& e : g.edges_) ++g.edge_offsets_[static_cast<std::size_t>(e.from) + 1];
  for (std::size_t i = 1; i < g.edge_offsets_.size(); ++i) g.edge_offsets_[i] += g.edge_offsets_[i - 1];
  return g;
}

}  // namespace feedacc
