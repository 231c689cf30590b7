#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feedacc/geometry.hpp"
#include "feedacc/tessellation.hpp"
#include "feedacc/timefmt.hpp"

namespace feedacc {

enum class Direction { Access, Egress };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

/// A conventional-PT stop that SMS trips feed into or out of.
struct Hub {
  std::string id;
  Point location;
  std::string gtfs_stop_id;
};

struct TripObservation {
  Seconds request_time = 0;
  Point origin;
  Point destination;
  std::string hub_id;
  double wait = 0.0;    // seconds
  double travel = 0.0;  // seconds
  Direction direction = Direction::Access;

  /// The non-hub endpoint: origin for access trips, destination for egress.
  const Point& site() const { return direction == Direction::Access ? origin : destination; }
};

struct Reject {
  std::size_t row = 0;  // 1-based data row
  std::string reason;
};

struct IngestOptions {
  double snap_radius = 50.0;
  /// Drop observations whose wait exceeds this cap (seconds); off by default.
  std::optional<double> max_wait;
};

struct IngestResult {
  std::vector<TripObservation> observations;
  std::vector<Reject> rejects;
  std::size_t total_rows = 0;

  std::size_t count(Direction d) const;
};

std::vector<Hub> load_hubs(const std::filesystem::path& path, const Projection& proj);

/// Throws FormatError if a hub refers to a stop id not in `stop_ids`.
void validate_hubs(std::span<const Hub> hubs, std::span<const std::string> stop_ids);

/// Reads the observation CSV and classifies every row as access or egress.
/// `grid`, when given, rejects rows whose non-hub endpoint lies outside it.
IngestResult parse_observations(std::istream& in, std::span<const Hub> hubs, const Projection& proj,
                                const IngestOptions& options, const Grid* grid,
                                std::string source = "<stream>");
IngestResult load_observations(const std::filesystem::path& path, std::span<const Hub> hubs,
                               const Projection& proj, const IngestOptions& options,
                               const Grid* grid);

struct FeederArea {
  std::string hub_id;
  double radius = 0.0;
  std::vector<CellId> cell_ids;  // ascending
};

/// Radius is the largest hub-to-cell-centroid distance among the hub's
/// observation sites; every cell whose centroid lies within it is included.
FeederArea feeder_area(const Hub& hub, std::span<const TripObservation> obs, const Grid& grid);

struct TimeslotKey {
  std::string hub_id;
  Direction direction = Direction::Access;
  Seconds slot_start = 0;
  Seconds slot_length = 3600;

  auto operator<=>(const TimeslotKey&) const = default;
};

inline constexpr Seconds kDefaultSlotLength = 3600;

using TimeslotBuckets = std::map<TimeslotKey, std::vector<TripObservation>>;

/// Buckets observations by (hub, direction, floor(t / slot_length)).
TimeslotBuckets group_by_timeslot(std::span<const TripObservation> obs,
                                  Seconds slot_length = kDefaultSlotLength);

// Classified-observation artifact (projected meters).
void write_observations(const std::filesystem::path& path, std::span<const TripObservation> obs);
std::vector<TripObservation> read_observations(const std::filesystem::path& path);
void write_rejects(const std::filesystem::path& path, std::span<const Reject> rejects);

void write_feeder_areas(const std::filesystem::path& path, std::span<const FeederArea> areas);
std::vector<FeederArea> read_feeder_areas(const std::filesystem::path& path);

}  // namespace feedacc
