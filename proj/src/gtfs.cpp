#include "feedacc/gtfs.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"

namespace feedacc {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void check_date(const std::string& s) {
  if (s.size() != 8 || !std::all_of(s.begin(), s.end(), ::isdigit))
    throw FormatError(fmt::format("invalid GTFS date '{}'", s));
}

std::filesystem::path require_file(const std::filesystem::path& dir, const char* name) {
  auto p = dir / name;
  if (!std::filesystem::exists(p))
    throw FormatError(fmt::format("GTFS feed '{}' is missing {}", dir.string(), name));
  return p;
}

std::optional<Seconds> optional_time(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_hms(s);
}

}  // namespace

int weekday_of(const std::string& yyyymmdd) {
  check_date(yyyymmdd);
  const long y = std::stol(yyyymmdd.substr(0, 4));
  const auto m = static_cast<unsigned>(std::stoi(yyyymmdd.substr(4, 2)));
  const auto d = static_cast<unsigned>(std::stoi(yyyymmdd.substr(6, 2)));
  const long days = days_from_civil(y, m, d);
  // 1970-01-01 was a Thursday (3 with Monday = 0).
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

std::optional<StopIndex> Schedule::find_stop(const std::string& id) const {
  const auto it = stop_index.find(id);
  if (it == stop_index.end()) return std::nullopt;
  return it->second;
}

StopIndex Schedule::add_stop(Stop stop) {
  const auto idx = static_cast<StopIndex>(stops.size());
  if (!stop_index.emplace(stop.id, idx).second)
    throw FormatError(fmt::format("duplicate stop_id '{}'", stop.id));
  stops.push_back(std::move(stop));
  return idx;
}

Schedule parse_gtfs(const std::filesystem::path& dir, const GtfsOptions& options) {
  const auto stops_path = require_file(dir, "stops.txt");
  const auto routes_path = require_file(dir, "routes.txt");
  const auto trips_path = require_file(dir, "trips.txt");
  const auto stop_times_path = require_file(dir, "stop_times.txt");
  const bool has_calendar = std::filesystem::exists(dir / "calendar.txt");
  const bool has_calendar_dates = std::filesystem::exists(dir / "calendar_dates.txt");
  if (!has_calendar && !has_calendar_dates)
    throw FormatError(
        fmt::format("GTFS feed '{}' is missing calendar.txt and calendar_dates.txt", dir.string()));
  if (!options.service_date.empty()) check_date(options.service_date);

  Schedule schedule;

  {
    const CsvTable t = read_csv(stops_path);
    const auto c_id = t.require("stop_id");
    const auto c_lat = t.require("stop_lat");
    const auto c_lon = t.require("stop_lon");
    for (const auto& r : t.rows()) {
      if (r[c_id].empty()) throw FormatError("stops.txt: empty stop_id");
      schedule.add_stop({r[c_id], options.projection.forward(parse_double(r[c_lon], "stop_lon"),
                                                             parse_double(r[c_lat], "stop_lat"))});
    }
  }

  std::unordered_set<std::string> routes;
  {
    const CsvTable t = read_csv(routes_path);
    const auto c_id = t.require("route_id");
    for (const auto& r : t.rows()) routes.insert(r[c_id]);
  }

  // Services known to the feed, and those active on the service date.
  std::set<std::string> services;
  std::set<std::string> active;
  if (has_calendar) {
    const CsvTable t = read_csv(dir / "calendar.txt");
    const auto c_id = t.require("service_id");
    static constexpr const char* kDays[] = {"monday", "tuesday",  "wednesday", "thursday",
                                            "friday", "saturday", "sunday"};
    std::size_t c_day[7];
    for (int i = 0; i < 7; ++i) c_day[i] = t.require(kDays[i]);
    const auto c_start = t.require("start_date");
    const auto c_end = t.require("end_date");
    const int wd = options.service_date.empty() ? -1 : weekday_of(options.service_date);
    for (const auto& r : t.rows()) {
      services.insert(r[c_id]);
      if (wd < 0) {
        active.insert(r[c_id]);
        continue;
      }
      check_date(r[c_start]);
      check_date(r[c_end]);
      if (r[c_start] <= options.service_date && options.service_date <= r[c_end] &&
          r[c_day[wd]] == "1")
        active.insert(r[c_id]);
    }
  }
  if (has_calendar_dates) {
    const CsvTable t = read_csv(dir / "calendar_dates.txt");
    const auto c_id = t.require("service_id");
    const auto c_date = t.require("date");
    const auto c_type = t.require("exception_type");
    for (const auto& r : t.rows()) {
      services.insert(r[c_id]);
      if (options.service_date.empty()) {
        if (r[c_type] == "1") active.insert(r[c_id]);
        continue;
      }
      if (r[c_date] != options.service_date) continue;
      if (r[c_type] == "1") active.insert(r[c_id]);
      else if (r[c_type] == "2") active.erase(r[c_id]);
      else throw FormatError(fmt::format("calendar_dates.txt: invalid exception_type '{}'", r[c_type]));
    }
  }

  std::unordered_map<std::string, TripIndex> trip_index;
  std::vector<ScheduledTrip> all_trips;
  {
    const CsvTable t = read_csv(trips_path);
    const auto c_id = t.require("trip_id");
    const auto c_route = t.require("route_id");
    const auto c_service = t.require("service_id");
    for (const auto& r : t.rows()) {
      if (!routes.contains(r[c_route]))
        throw FormatError(fmt::format("trips.txt: route_id '{}' not in routes.txt", r[c_route]));
      if (!services.contains(r[c_service]))
        throw FormatError(fmt::format("trips.txt: service_id '{}' not in calendar", r[c_service]));
      if (!trip_index.emplace(r[c_id], static_cast<TripIndex>(all_trips.size())).second)
        throw FormatError(fmt::format("trips.txt: duplicate trip_id '{}'", r[c_id]));
      all_trips.push_back({r[c_id], r[c_route], r[c_service], {}});
    }
  }

  {
    const CsvTable t = read_csv(stop_times_path);
    const auto c_trip = t.require("trip_id");
    const auto c_arr = t.require("arrival_time");
    const auto c_dep = t.require("departure_time");
    const auto c_stop = t.require("stop_id");
    const auto c_seq = t.require("stop_sequence");
    std::vector<std::vector<std::pair<StopTime, bool>>> raw(all_trips.size());
    for (const auto& r : t.rows()) {
      const auto trip = trip_index.find(r[c_trip]);
      if (trip == trip_index.end())
        throw FormatError(fmt::format("stop_times.txt: trip_id '{}' not in trips.txt", r[c_trip]));
      const auto stop = schedule.find_stop(r[c_stop]);
      if (!stop)
        throw FormatError(fmt::format("stop_times.txt: stop_id '{}' not in stops.txt", r[c_stop]));
      auto arr = optional_time(r[c_arr]);
      auto dep = optional_time(r[c_dep]);
      if (!arr) arr = dep;
      if (!dep) dep = arr;
      StopTime st{*stop, arr.value_or(0), dep.value_or(0),
                  static_cast<int>(parse_int(r[c_seq], "stop_sequence"))};
      if (st.departure < st.arrival)
        throw FormatError(fmt::format("stop_times.txt: trip '{}' departs before it arrives", r[c_trip]));
      raw[static_cast<std::size_t>(trip->second)].push_back({st, arr.has_value()});
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto& rows = raw[i];
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto& a, const auto& b) { return a.first.sequence < b.first.sequence; });
      // Untimed intermediate stops: interpolate linearly by position.
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].second) continue;
        std::size_t lo = k, hi = k;
        while (lo > 0 && !rows[lo].second) --lo;
        while (hi + 1 < rows.size() && !rows[hi].second) ++hi;
        if (!rows[lo].second || !rows[hi].second)
          throw FormatError(fmt::format("stop_times.txt: trip '{}' has untimed terminal stops",
                                        all_trips[i].id));
        const double frac = static_cast<double>(k - lo) / static_cast<double>(hi - lo);
        const double t0 = rows[lo].first.departure;
        const double t1 = rows[hi].first.arrival;
        rows[k].first.arrival = rows[k].first.departure =
            static_cast<Seconds>(std::lround(t0 + frac * (t1 - t0)));
      }
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (k > 0 && rows[k].first.arrival < rows[k - 1].first.departure)
          throw FormatError(
              fmt::format("stop_times.txt: trip '{}' goes back in time", all_trips[i].id));
        all_trips[i].stop_times.push_back(rows[k].first);
      }
    }
  }

  // Frequency-based trips become explicit copies of their template.
  std::unordered_map<std::string, std::vector<std::tuple<Seconds, Seconds, Seconds>>> freqs;
  if (std::filesystem::exists(dir / "frequencies.txt")) {
    const CsvTable t = read_csv(dir / "frequencies.txt");
    const auto c_trip = t.require("trip_id");
    const auto c_start = t.require("start_time");
    const auto c_end = t.require("end_time");
    const auto c_headway = t.require("headway_secs");
    for (const auto& r : t.rows()) {
      if (!trip_index.contains(r[c_trip]))
        throw FormatError(fmt::format("frequencies.txt: trip_id '{}' not in trips.txt", r[c_trip]));
      const auto headway = static_cast<Seconds>(parse_int(r[c_headway], "headway_secs"));
      if (headway <= 0) throw FormatError("frequencies.txt: headway_secs must be positive");
      freqs[r[c_trip]].emplace_back(parse_hms(r[c_start]), parse_hms(r[c_end]), headway);
    }
  }

  for (auto& trip : all_trips) {
    if (!active.contains(trip.service_id) || trip.stop_times.empty()) continue;
    const auto f = freqs.find(trip.id);
    if (f == freqs.end()) {
      schedule.trips.push_back(std::move(trip));
      continue;
    }
    const Seconds base = trip.stop_times.front().departure;
    for (const auto& [start, end, headway] : f->second) {
      for (Seconds t0 = start; t0 < end; t0 += headway) {
        ScheduledTrip copy = trip;
        copy.id = fmt::format("{}@{}", trip.id, format_hms(t0));
        for (auto& st : copy.stop_times) {
          st.arrival += t0 - base;
          st.departure += t0 - base;
        }
        schedule.trips.push_back(std::move(copy));
      }
    }
  }
  return schedule;
}

}  // namespace feedacc
