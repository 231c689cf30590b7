#include "feedacc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"
#include "feedacc/gtfs.hpp"

namespace feedacc {

TimeslotSeries::TimeslotSeries(Seconds slot_length) : slot_length_(slot_length) {
  if (slot_length <= 0) throw InvalidParameter("slot length must be positive");
}

void TimeslotSeries::set(Seconds slot_start, double value) {
  values_[slot_start - slot_start % slot_length_] = value;
}

std::optional<double> TimeslotSeries::at(Seconds t) const {
  if (values_.empty()) return std::nullopt;
  const Seconds slot = t - ((t % slot_length_) + slot_length_) % slot_length_;
  const auto hi = values_.lower_bound(slot);
  if (hi != values_.end() && hi->first == slot) return hi->second;
  if (hi == values_.begin()) return hi->second;
  const auto lo = std::prev(hi);
  if (hi == values_.end()) return lo->second;
  return (slot - lo->first) <= (hi->first - slot) ? lo->second : hi->second;
}

Seconds virtual_headway(double w_hat, Seconds floor) {
  return static_cast<Seconds>(std::llround(std::max(2.0 * w_hat, static_cast<double>(floor))));
}

std::vector<Seconds> generate_departures(const std::function<double(Seconds)>& w_hat,
                                         Seconds anchor_t0, Seconds floor) {
  if (floor <= 0) throw InvalidParameter("headway floor must be positive");
  if (anchor_t0 < 0 || anchor_t0 > kLastDeparture)
    throw InvalidParameter(fmt::format("anchor {} outside the service day", anchor_t0));
  std::vector<Seconds> before;
  for (Seconds t = anchor_t0;;) {
    const Seconds next = t - virtual_headway(w_hat(t), floor);
    if (next < 0) break;
    before.push_back(next);
    t = next;
  }
  std::vector<Seconds> out(before.rbegin(), before.rend());
  out.push_back(anchor_t0);
  for (Seconds t = anchor_t0;;) {
    const Seconds next = t + virtual_headway(w_hat(t), floor);
    if (next > kLastDeparture) break;
    out.push_back(next);
    t = next;
  }
  return out;
}

std::vector<Seconds> generate_departures(const TimeslotSeries& w_hat, Seconds anchor_t0,
                                         Seconds floor) {
  if (w_hat.empty()) return {};
  return generate_departures([&](Seconds t) { return *w_hat.at(t); }, anchor_t0, floor);
}

std::string virtual_stop_id(CellId cell) { return fmt::format("VC_{}", cell); }

namespace {
char direction_tag(Direction d) { return d == Direction::Access ? 'A' : 'E'; }
}  // namespace

std::string virtual_route_id(const std::string& hub_id, Direction direction) {
  return fmt::format("VR_{}_{}", hub_id, direction_tag(direction));
}

VirtualTripBatch build_virtual_trips(std::span<const Seconds> departures, CellId cell,
                                     const std::string& hub_id, Direction direction,
                                     const TimeslotSeries& travel, const TimeslotSeries& wait) {
  VirtualTripBatch batch;
  std::size_t k = 0;
  for (Seconds depart : departures) {
    const auto y = travel.at(depart);
    if (!y) {
      ++batch.dropped;
      continue;
    }
    const auto offset = std::max<long long>(1, std::llround(*y));
    const long long arrive = depart + offset;
    if (arrive > kDaySeconds) {
      ++batch.dropped;
      continue;
    }
    VirtualTrip trip;
    trip.trip_id = fmt::format("VT_{}_{}_{}_{}", hub_id, direction_tag(direction), cell, k++);
    trip.direction = direction;
    trip.cell = cell;
    trip.hub_id = hub_id;
    trip.depart = depart;
    trip.arrive = static_cast<Seconds>(arrive);
    trip.w_hat = wait.at(depart).value_or(0.0);
    trip.y_hat = *y;
    batch.trips.push_back(std::move(trip));
  }
  return batch;
}

VirtualTripBatch synthesize(std::span<const FieldEstimate> estimates, Seconds slot_length,
                            const SynthOptions& options) {
  using GroupKey = std::tuple<std::string, Direction, CellId>;
  std::map<GroupKey, std::pair<TimeslotSeries, TimeslotSeries>> groups;
  for (const auto& e : estimates) {
    auto [it, inserted] = groups.try_emplace(GroupKey{e.key.hub_id, e.key.direction, e.centroid_id},
                                             TimeslotSeries(slot_length), TimeslotSeries(slot_length));
    it->second.first.set(e.key.slot_start, e.w_hat);
    it->second.second.set(e.key.slot_start, e.y_hat);
  }
  VirtualTripBatch out;
  for (const auto& [key, fields] : groups) {
    const auto& [hub, dir, cell] = key;
    const auto deps = generate_departures(fields.first, options.anchor, options.headway_floor);
    auto batch = build_virtual_trips(deps, cell, hub, dir, fields.second, fields.first);
    out.dropped += batch.dropped;
    std::move(batch.trips.begin(), batch.trips.end(), std::back_inserter(out.trips));
  }
  return out;
}

namespace {

CsvTable read_or_empty(const std::filesystem::path& path, std::initializer_list<const char*> cols) {
  if (std::filesystem::exists(path)) return read_csv(path);
  CsvRow header(cols.begin(), cols.end());
  return CsvTable(std::move(header), {}, path.filename().string());
}

void append(CsvTable& t, const std::vector<std::pair<std::string_view, std::string>>& fields) {
  std::vector<std::size_t> idx;
  for (const auto& f : fields) idx.push_back(t.ensure_column(f.first));
  CsvRow row(t.header().size());
  for (std::size_t i = 0; i < fields.size(); ++i) row[idx[i]] = fields[i].second;
  t.rows().push_back(std::move(row));
}

std::set<std::string> column_values(const CsvTable& t, std::string_view column) {
  std::set<std::string> out;
  if (auto c = t.find(column))
    for (const auto& r : t.rows()) out.insert(r[*c]);
  return out;
}

}  // namespace

void emit_gtfs(std::span<const VirtualTrip> trips, const Grid& grid, std::span<const Hub> hubs,
               const Projection& proj, const std::filesystem::path& base_dir,
               const std::filesystem::path& out_dir, const std::string& service_date) {
  namespace fs = std::filesystem;
  GtfsOptions opts;
  opts.projection = proj;
  (void)parse_gtfs(base_dir, opts);

  std::map<std::string, std::string> hub_stop;
  for (const auto& h : hubs) hub_stop[h.id] = h.gtfs_stop_id;

  CsvTable stops = read_csv(base_dir / "stops.txt");
  CsvTable routes = read_csv(base_dir / "routes.txt");
  CsvTable trips_t = read_csv(base_dir / "trips.txt");
  CsvTable stop_times = read_csv(base_dir / "stop_times.txt");
  CsvTable calendar = read_or_empty(base_dir / "calendar.txt",
                                    {"service_id", "monday", "tuesday", "wednesday", "thursday",
                                     "friday", "saturday", "sunday", "start_date", "end_date"});

  const auto stop_ids = column_values(stops, "stop_id");
  const auto route_ids = column_values(routes, "route_id");
  const auto trip_ids = column_values(trips_t, "trip_id");
  std::set<std::string> service_ids = column_values(calendar, "service_id");
  if (fs::exists(base_dir / "calendar_dates.txt"))
    service_ids.merge(column_values(read_csv(base_dir / "calendar_dates.txt"), "service_id"));
  if (service_ids.contains(kVirtualServiceId))
    throw FormatError(fmt::format("service_id '{}' already exists in the base feed", kVirtualServiceId));

  std::string agency_id;
  if (routes.find("agency_id") && fs::exists(base_dir / "agency.txt")) {
    const CsvTable agency = read_csv(base_dir / "agency.txt");
    if (auto c = agency.find("agency_id"); c && !agency.rows().empty()) agency_id = agency.rows()[0][*c];
  }

  std::set<CellId> cells;
  std::set<std::pair<std::string, Direction>> virtual_routes;
  for (const auto& t : trips) {
    if (!hub_stop.contains(t.hub_id))
      throw FormatError(fmt::format("virtual trip '{}' refers to unknown hub '{}'", t.trip_id, t.hub_id));
    if (!stop_ids.contains(hub_stop[t.hub_id]))
      throw FormatError(fmt::format("hub '{}' stop '{}' not in base feed", t.hub_id, hub_stop[t.hub_id]));
    if (trip_ids.contains(t.trip_id))
      throw FormatError(fmt::format("trip_id '{}' already exists in the base feed", t.trip_id));
    cells.insert(t.cell);
    virtual_routes.emplace(t.hub_id, t.direction);
  }

  for (CellId c : cells) {
    const std::string id = virtual_stop_id(c);
    if (stop_ids.contains(id)) throw FormatError(fmt::format("duplicate stop_id '{}'", id));
    const Point g = proj.inverse(grid.cell(c).centroid);
    append(stops, {{"stop_id", id},
                   {"stop_name", fmt::format("Virtual centroid {}", c)},
                   {"stop_lat", fmt::format("{}", g.y)},
                   {"stop_lon", fmt::format("{}", g.x)}});
  }
  for (const auto& [hub, dir] : virtual_routes) {
    const std::string id = virtual_route_id(hub, dir);
    if (route_ids.contains(id)) throw FormatError(fmt::format("duplicate route_id '{}'", id));
    std::vector<std::pair<std::string_view, std::string>> fields{
        {"route_id", id},
        {"route_short_name", id},
        {"route_long_name", fmt::format("SMS {} {}", to_string(dir), hub)},
        {"route_type", "3"}};
    if (!agency_id.empty()) fields.emplace_back("agency_id", agency_id);
    append(routes, fields);
  }
  for (const auto& t : trips) {
    append(trips_t, {{"route_id", virtual_route_id(t.hub_id, t.direction)},
                     {"service_id", kVirtualServiceId},
                     {"trip_id", t.trip_id}});
    const std::string centroid = virtual_stop_id(t.cell);
    const std::string& hub = hub_stop[t.hub_id];
    const std::string& from = t.direction == Direction::Access ? centroid : hub;
    const std::string& to = t.direction == Direction::Access ? hub : centroid;
    append(stop_times, {{"trip_id", t.trip_id},
                        {"arrival_time", format_hms(t.depart)},
                        {"departure_time", format_hms(t.depart)},
                        {"stop_id", from},
                        {"stop_sequence", "1"}});
    append(stop_times, {{"trip_id", t.trip_id},
                        {"arrival_time", format_hms(t.arrive)},
                        {"departure_time", format_hms(t.arrive)},
                        {"stop_id", to},
                        {"stop_sequence", "2"}});
  }
  append(calendar, {{"service_id", kVirtualServiceId},
                    {"monday", "1"},
                    {"tuesday", "1"},
                    {"wednesday", "1"},
                    {"thursday", "1"},
                    {"friday", "1"},
                    {"saturday", "1"},
                    {"sunday", "1"},
                    {"start_date", service_date.empty() ? "20000101" : service_date},
                    {"end_date", service_date.empty() ? "20991231" : service_date}});

  fs::create_directories(out_dir);
  const std::set<std::string> rewritten{"stops.txt", "routes.txt", "trips.txt", "stop_times.txt",
                                        "calendar.txt"};
  for (const auto& entry : fs::directory_iterator(base_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (rewritten.contains(name)) continue;
    fs::copy_file(entry.path(), out_dir / name, fs::copy_options::overwrite_existing);
  }
  write_csv(out_dir / "stops.txt", stops);
  write_csv(out_dir / "routes.txt", routes);
  write_csv(out_dir / "trips.txt", trips_t);
  write_csv(out_dir / "stop_times.txt", stop_times);
  write_csv(out_dir / "calendar.txt", calendar);
}

void write_virtual_trips(const std::filesystem::path& path, std::span<const VirtualTrip> trips) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"trip_id", "direction", "cell_id", "hub_id", "depart", "arrive", "w_hat", "y_hat"});
  for (const auto& t : trips)
    write_csv_row(out, {t.trip_id, std::string(to_string(t.direction)), std::to_string(t.cell),
                        t.hub_id, format_hms(t.depart), format_hms(t.arrive),
                        fmt::format("{}", t.w_hat), fmt::format("{}", t.y_hat)});
}

std::vector<VirtualTrip> read_virtual_trips(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.require("trip_id");
  const auto c_dir = t.require("direction");
  const auto c_cell = t.require("cell_id");
  const auto c_hub = t.require("hub_id");
  const auto c_dep = t.require("depart");
  const auto c_arr = t.require("arrive");
  const auto c_w = t.require("w_hat");
  const auto c_y = t.require("y_hat");
  std::vector<VirtualTrip> out;
  for (const auto& r : t.rows()) {
    VirtualTrip v;
    v.trip_id = r[c_id];
    v.direction = parse_direction(r[c_dir]);
    v.cell = static_cast<CellId>(parse_int(r[c_cell], "cell_id"));
    v.hub_id = r[c_hub];
    v.depart = parse_hms(r[c_dep]);
    v.arrive = parse_hms(r[c_arr]);
    v.w_hat = parse_double(r[c_w], "w_hat");
    v.y_hat = parse_double(r[c_y], "y_hat");
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace feedacc
