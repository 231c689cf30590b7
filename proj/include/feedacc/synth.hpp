#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedacc/geometry.hpp"
#include "feedacc/geostat.hpp"
#include "feedacc/ingest.hpp"
#include "feedacc/tessellation.hpp"
#include "feedacc/timefmt.hpp"

namespace feedacc {

inline constexpr Seconds kDefaultAnchor = 12 * 3600;
inline constexpr Seconds kLastDeparture = 86340;  // 23:59:00
inline constexpr Seconds kDefaultHeadwayFloor = 60;
inline constexpr const char* kVirtualServiceId = "VIRTUAL_SMS";

/// Piecewise-constant value per timeslot for one (cell, hub, direction).
/// Slots without a value reuse the nearest slot that has one (earlier slot
/// on ties).
class TimeslotSeries {
 public:
  explicit TimeslotSeries(Seconds slot_length = kDefaultSlotLength);

  void set(Seconds slot_start, double value);
  std::optional<double> at(Seconds t) const;
  bool empty() const { return values_.empty(); }
  Seconds slot_length() const { return slot_length_; }
  const std::map<Seconds, double>& values() const { return values_; }

 private:
  Seconds slot_length_;
  std::map<Seconds, double> values_;
};

/// Headway at time t: round(max(2 w_hat(t), floor)) whole seconds.
Seconds virtual_headway(double w_hat, Seconds floor = kDefaultHeadwayFloor);

/// Departures t_j from the anchor: forward t_j = t_{j-1} + H(t_{j-1}) while
/// t_j <= 23:59:00, backward t_j = t_{j+1} - H(t_{j+1}) while t_j >= 0.
/// Sorted ascending. `w_hat` returns the expected wait at a time.
std::vector<Seconds> generate_departures(const std::function<double(Seconds)>& w_hat,
                                         Seconds anchor_t0 = kDefaultAnchor,
                                         Seconds floor = kDefaultHeadwayFloor);
/// Empty when the field has no value in any timeslot.
std::vector<Seconds> generate_departures(const TimeslotSeries& w_hat,
                                         Seconds anchor_t0 = kDefaultAnchor,
                                         Seconds floor = kDefaultHeadwayFloor);

struct VirtualTrip {
  std::string trip_id;
  Direction direction = Direction::Access;
  CellId cell = 0;
  std::string hub_id;
  Seconds depart = 0;
  Seconds arrive = 0;
  double w_hat = 0.0;
  double y_hat = 0.0;
};

struct VirtualTripBatch {
  std::vector<VirtualTrip> trips;
  std::size_t dropped = 0;  // arrival after midnight
};

/// One trip per departure; arrive = depart + max(1, round(y_hat(depart))).
/// Trips arriving after 24:00:00 are dropped and counted.
VirtualTripBatch build_virtual_trips(std::span<const Seconds> departures, CellId cell,
                                     const std::string& hub_id, Direction direction,
                                     const TimeslotSeries& travel, const TimeslotSeries& wait);

std::string virtual_stop_id(CellId cell);
std::string virtual_route_id(const std::string& hub_id, Direction direction);

struct SynthOptions {
  Seconds anchor = kDefaultAnchor;
  Seconds headway_floor = kDefaultHeadwayFloor;
};

/// Groups estimates by (hub, direction, cell) and synthesizes every group,
/// ordered by that key.
VirtualTripBatch synthesize(std::span<const FieldEstimate> estimates, Seconds slot_length,
                            const SynthOptions& options = {});

/// Copies the base feed into `out_dir` and appends virtual stops, routes,
/// trips, stop_times and a calendar row for the virtual service. An empty
/// `service_date` makes the service valid every day.
void emit_gtfs(std::span<const VirtualTrip> trips, const Grid& grid, std::span<const Hub> hubs,
               const Projection& proj, const std::filesystem::path& base_dir,
               const std::filesystem::path& out_dir, const std::string& service_date = {});

void write_virtual_trips(const std::filesystem::path& path, std::span<const VirtualTrip> trips);
std::vector<VirtualTrip> read_virtual_trips(const std::filesystem::path& path);

}  // namespace feedacc
