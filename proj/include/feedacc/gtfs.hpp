#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "feedacc/geometry.hpp"
#include "feedacc/timefmt.hpp"

namespace feedacc {

using StopIndex = std::int32_t;
using TripIndex = std::int32_t;

struct Stop {
  std::string id;
  Point location;
};

struct StopTime {
  StopIndex stop = 0;
  Seconds arrival = 0;
  Seconds departure = 0;
  int sequence = 0;
};

struct ScheduledTrip {
  std::string id;
  std::string route_id;
  std::string service_id;
  std::vector<StopTime> stop_times;  // ordered by stop_sequence
};

/// One service day of a GTFS feed.
struct Schedule {
  std::vector<Stop> stops;
  std::vector<ScheduledTrip> trips;
  std::unordered_map<std::string, StopIndex> stop_index;

  std::optional<StopIndex> find_stop(const std::string& id) const;
  StopIndex add_stop(Stop stop);
};

struct GtfsOptions {
  Projection projection;
  /// `YYYYMMDD`; empty keeps every service.
  std::string service_date;
};

/// Parses stops, routes, trips, stop_times and calendar / calendar_dates
/// (optional frequencies are expanded to explicit trips). Throws FormatError
/// for missing files, malformed rows or dangling foreign keys.
Schedule parse_gtfs(const std::filesystem::path& dir, const GtfsOptions& options = {});

/// Day of week for a `YYYYMMDD` date, 0 = Monday.
int weekday_of(const std::string& yyyymmdd);

}  // namespace feedacc
