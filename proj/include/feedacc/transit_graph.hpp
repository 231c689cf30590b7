#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feedacc/gtfs.hpp"

namespace feedacc {

/// Walking at constant speed, capped at `max_walk`. Walk times are rounded
/// up to whole seconds.
struct WalkParams {
  double walk_speed = 5000.0 / 3600.0;  // m/s (5 km/h)
  Seconds max_walk = 900;               // 15 minutes

  Seconds walk_seconds(double meters) const;
  bool within_reach(Seconds walk) const { return walk <= max_walk; }
  double reach_meters() const { return walk_speed * max_walk; }
};

using StopNeighbors = std::vector<std::vector<std::pair<StopIndex, Seconds>>>;

/// Stop-to-stop walking times: straight line unless a precomputed matrix
/// entry overrides the pair.
class WalkModel {
 public:
  explicit WalkModel(WalkParams params = {}) : params_(params) {}

  const WalkParams& params() const { return params_; }
  void add_override(StopIndex from, StopIndex to, Seconds walk);
  /// Reads `from_stop_id,to_stop_id,walk_s`; ids must exist in `schedule`.
  void load_matrix(const std::filesystem::path& path, const Schedule& schedule);

  Seconds stop_to_stop(const std::vector<Stop>& stops, StopIndex a, StopIndex b) const;
  /// For each stop, all stops (itself included) reachable within max_walk.
  StopNeighbors neighbors(const std::vector<Stop>& stops) const;

 private:
  WalkParams params_;
  std::map<std::pair<StopIndex, StopIndex>, Seconds> overrides_;
};

using NodeId = std::int32_t;

enum class NodeKind : std::uint8_t { Arrival, Departure };
enum class EdgeKind : std::uint8_t { Ride, Dwell, Transfer };

struct StoptimeNode {
  StopIndex stop = 0;
  Seconds time = 0;
  TripIndex trip = 0;
  NodeKind kind = NodeKind::Arrival;
};

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  EdgeKind kind = EdgeKind::Ride;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct GraphOptions {
  Seconds transfer_buffer = 0;
  /// Link each arrival only to the earliest feasible departure per other trip.
  bool prune_transfers = true;
};

/// Stoptime nodes plus ride, dwell and walk-transfer edges. Immutable once
/// built; every edge is non-decreasing in time.
class TimeExpandedGraph {
 public:
  const std::vector<StoptimeNode>& nodes() const { return nodes_; }
  const StoptimeNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  /// All edges, sorted by (from, to, kind).
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Edge> out_edges(NodeId id) const;

  const std::vector<Stop>& stops() const { return stops_; }
  const std::vector<std::string>& trip_ids() const { return trip_ids_; }
  /// Departure nodes at a stop, sorted by (time, id).
  std::span<const NodeId> departures_at(StopIndex s) const;
  /// Arrival nodes at a stop, sorted by (time, id).
  std::span<const NodeId> arrivals_at(StopIndex s) const;
  const WalkParams& walk() const { return walk_; }

 private:
  friend TimeExpandedGraph build_graph(const Schedule&, const WalkModel&, const GraphOptions&);

  std::vector<StoptimeNode> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> edge_offsets_;
  std::vector<Stop> stops_;
  std::vector<std::string> trip_ids_;
  std::vector<std::vector<NodeId>> departures_;
  std::vector<std::vector<NodeId>> arrivals_;
  WalkParams walk_;
};

TimeExpandedGraph build_graph(const Schedule& schedule, const WalkModel& walk,
                              const GraphOptions& options = {});

}  // namespace feedacc
