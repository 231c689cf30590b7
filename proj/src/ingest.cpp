#include "feedacc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <fmt/format.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"

namespace feedacc {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const Hub* find_hub(std::span<const Hub> hubs, std::string_view id) {
  for (const auto& h : hubs)
    if (h.id == id) return &h;
  return nullptr;
}

const Hub* nearest_hub_within(std::span<const Hub> hubs, const Point& p, double radius) {
  const Hub* best = nullptr;
  double best_d = 0.0;
  for (const auto& h : hubs) {
    const double d = distance(h.location, p);
    if (d <= radius && (!best || d < best_d)) {
      best = &h;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::Access ? "access" : "egress"; }

Direction parse_direction(std::string_view text) {
  const auto s = lower(text);
  if (s == "access") return Direction::Access;
  if (s == "egress") return Direction::Egress;
  throw FormatError(fmt::format("invalid direction '{}'", text));
}

std::size_t IngestResult::count(Direction d) const {
  return static_cast<std::size_t>(std::count_if(
      observations.begin(), observations.end(), [d](const auto& o) { return o.direction == d; }));
}

std::vector<Hub> load_hubs(const std::filesystem::path& path, const Projection& proj) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.require("hub_id");
  const auto c_lon = t.require("lon");
  const auto c_lat = t.require("lat");
  const auto c_stop = t.require("gtfs_stop_id");
  std::vector<Hub> hubs;
  for (const auto& r : t.rows()) {
    if (r[c_id].empty()) throw FormatError(fmt::format("{}: empty hub_id", path.string()));
    if (find_hub(hubs, r[c_id]))
      throw FormatError(fmt::format("{}: duplicate hub_id '{}'", path.string(), r[c_id]));
    hubs.push_back({r[c_id],
                    proj.forward(parse_double(r[c_lon], "hub lon"), parse_double(r[c_lat], "hub lat")),
                    r[c_stop]});
  }
  return hubs;
}

void validate_hubs(std::span<const Hub> hubs, std::span<const std::string> stop_ids) {
  for (const auto& h : hubs) {
    if (std::find(stop_ids.begin(), stop_ids.end(), h.gtfs_stop_id) == stop_ids.end())
      throw FormatError(
          fmt::format("hub '{}' references unknown GTFS stop_id '{}'", h.id, h.gtfs_stop_id));
  }
}

IngestResult parse_observations(std::istream& in, std::span<const Hub> hubs, const Projection& proj,
                                const IngestOptions& options, const Grid* grid,
                                std::string source) {
  const CsvTable t = parse_csv(in, std::move(source));
  const auto c_time = t.require("request_time");
  const auto c_olon = t.require("origin_lon");
  const auto c_olat = t.require("origin_lat");
  const auto c_dlon = t.require("dest_lon");
  const auto c_dlat = t.require("dest_lat");
  const auto c_hub = t.require("hub_id");
  const auto c_wait = t.require("wait_s");
  const auto c_travel = t.require("travel_s");
  const auto c_dir = t.find("direction");

  IngestResult result;
  result.total_rows = t.rows().size();

  for (std::size_t i = 0; i < t.rows().size(); ++i) {
    const auto& r = t.rows()[i];
    const std::size_t row_no = i + 1;
    auto reject = [&](std::string reason) { result.rejects.push_back({row_no, std::move(reason)}); };

    TripObservation o;
    try {
      o.request_time = parse_hms(r[c_time]);
      o.origin = proj.forward(parse_double(r[c_olon], "origin_lon"), parse_double(r[c_olat], "origin_lat"));
      o.destination = proj.forward(parse_double(r[c_dlon], "dest_lon"), parse_double(r[c_dlat], "dest_lat"));
      o.wait = parse_double(r[c_wait], "wait_s");
      o.travel = parse_double(r[c_travel], "travel_s");
    } catch (const FormatError& e) {
      reject(e.what());
      continue;
    }
    if (o.request_time >= kDaySeconds) {
      reject("request time outside service day");
      continue;
    }
    if (o.wait < 0) {
      reject("negative wait");
      continue;
    }
    if (o.travel < 0) {
      reject("negative travel");
      continue;
    }
    if (options.max_wait && o.wait > *options.max_wait) {
      reject("wait above cap");
      continue;
    }

    const Hub* hub = nullptr;
    if (!r[c_hub].empty()) {
      hub = find_hub(hubs, r[c_hub]);
      if (!hub) {
        reject(fmt::format("unknown hub '{}'", r[c_hub]));
        continue;
      }
    }

    std::optional<Direction> dir;
    if (c_dir && !r[*c_dir].empty()) {
      try {
        dir = parse_direction(r[*c_dir]);
      } catch (const FormatError& e) {
        reject(e.what());
        continue;
      }
      if (!hub) {
        hub = nearest_hub_within(hubs, *dir == Direction::Access ? o.destination : o.origin,
                                 options.snap_radius);
        if (!hub) {
          reject("unclassifiable");
          continue;
        }
      }
    } else if (hub) {
      const bool dest_at_hub = distance(o.destination, hub->location) <= options.snap_radius;
      const bool orig_at_hub = distance(o.origin, hub->location) <= options.snap_radius;
      if (dest_at_hub && orig_at_hub) {
        reject("ambiguous");
        continue;
      }
      if (!dest_at_hub && !orig_at_hub) {
        reject("unclassifiable");
        continue;
      }
      dir = dest_at_hub ? Direction::Access : Direction::Egress;
    } else {
      const Hub* to = nearest_hub_within(hubs, o.destination, options.snap_radius);
      const Hub* from = nearest_hub_within(hubs, o.origin, options.snap_radius);
      if (to && from) {
        reject("ambiguous");
        continue;
      }
      if (!to && !from) {
        reject("unclassifiable");
        continue;
      }
      hub = to ? to : from;
      dir = to ? Direction::Access : Direction::Egress;
    }

    o.hub_id = hub->id;
    o.direction = *dir;
    if (grid && !grid->try_locate(o.site())) {
      reject("outside study area");
      continue;
    }
    result.observations.push_back(std::move(o));
  }
  return result;
}

IngestResult load_observations(const std::filesystem::path& path, std::span<const Hub> hubs,
                               const Projection& proj, const IngestOptions& options,
                               const Grid* grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
  return parse_observations(in, hubs, proj, options, grid, path.string());
}

FeederArea feeder_area(const Hub& hub, std::span<const TripObservation> obs, const Grid& grid) {
  FeederArea area{hub.id, 0.0, {}};
  bool any = false;
  for (const auto& o : obs) {
    if (o.hub_id != hub.id) continue;
    const CellId cell = grid.locate(o.site());
    area.radius = std::max(area.radius, distance(hub.location, grid.cell(cell).centroid));
    any = true;
  }
  if (!any) return area;
  const double tol = 1e-9 * std::max(1.0, area.radius);
  for (const auto& c : grid.cells())
    if (distance(hub.location, c.centroid) <= area.radius + tol) area.cell_ids.push_back(c.id);
  return area;
}

TimeslotBuckets group_by_timeslot(std::span<const TripObservation> obs, Seconds slot_length) {
  if (slot_length <= 0 || kDaySeconds % slot_length != 0)
    throw InvalidParameter(fmt::format("slot length {} s does not divide a day", slot_length));
  TimeslotBuckets buckets;
  for (const auto& o : obs) {
    const Seconds start = (o.request_time / slot_length) * slot_length;
    buckets[{o.hub_id, o.direction, start, slot_length}].push_back(o);
  }
  return buckets;
}

void write_observations(const std::filesystem::path& path, std::span<const TripObservation> obs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"request_time", "origin_x", "origin_y", "dest_x", "dest_y", "hub_id",
                      "wait_s", "travel_s", "direction"});
  for (const auto& o : obs) {
    write_csv_row(out, {format_hms(o.request_time), fmt::format("{}", o.origin.x),
                        fmt::format("{}", o.origin.y), fmt::format("{}", o.destination.x),
                        fmt::format("{}", o.destination.y), o.hub_id, fmt::format("{}", o.wait),
                        fmt::format("{}", o.travel), std::string(to_string(o.direction))});
  }
}

std::vector<TripObservation> read_observations(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_time = t.require("request_time");
  const auto c_ox = t.require("origin_x");
  const auto c_oy = t.require("origin_y");
  const auto c_dx = t.require("dest_x");
  const auto c_dy = t.require("dest_y");
  const auto c_hub = t.require("hub_id");
  const auto c_wait = t.require("wait_s");
  const auto c_travel = t.require("travel_s");
  const auto c_dir = t.require("direction");
  std::vector<TripObservation> out;
  out.reserve(t.rows().size());
  for (const auto& r : t.rows()) {
    out.push_back({parse_hms(r[c_time]),
                   {parse_double(r[c_ox], "origin_x"), parse_double(r[c_oy], "origin_y")},
                   {parse_double(r[c_dx], "dest_x"), parse_double(r[c_dy], "dest_y")},
                   r[c_hub],
                   parse_double(r[c_wait], "wait_s"),
                   parse_double(r[c_travel], "travel_s"),
                   parse_direction(r[c_dir])});
  }
  return out;
}

void write_rejects(const std::filesystem::path& path, std::span<const Reject> rejects) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"row", "reason"});
  for (const auto& r : rejects) write_csv_row(out, {std::to_string(r.row), r.reason});
}

void write_feeder_areas(const std::filesystem::path& path, std::span<const FeederArea> areas) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  write_csv_row(out, {"hub_id", "radius", "cell_id"});
  for (const auto& a : areas) {
    if (a.cell_ids.empty()) write_csv_row(out, {a.hub_id, fmt::format("{}", a.radius), ""});
    for (CellId c : a.cell_ids)
      write_csv_row(out, {a.hub_id, fmt::format("{}", a.radius), std::to_string(c)});
  }
}

std::vector<FeederArea> read_feeder_areas(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_hub = t.require("hub_id");
  const auto c_radius = t.require("radius");
  const auto c_cell = t.require("cell_id");
  std::vector<FeederArea> out;
  for (const auto& r : t.rows()) {
    if (out.empty() || out.back().hub_id != r[c_hub])
      out.push_back({r[c_hub], parse_double(r[c_radius], "radius"), {}});
    if (!r[c_cell].empty())
      out.back().cell_ids.push_back(static_cast<CellId>(parse_int(r[c_cell], "cell_id")));
  }
  return out;
}

}  // namespace feedacc
