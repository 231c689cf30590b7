#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "feedacc/gtfs.hpp"
#include "feedacc/timefmt.hpp"
#include "oracles.hpp"

namespace testutil {

namespace fs = std::filesystem;
using feedacc::Seconds;

inline fs::path data_dir() { return fs::path(FEEDACC_TEST_DATA); }

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / fmt::format("feedacc_test_{}", name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes a planar-coordinate schedule as a minimal GTFS feed.
inline void write_gtfs(const fs::path& dir, const feedacc::Schedule& s) {
  fs::create_directories(dir);
  std::string stops = "stop_id,stop_name,stop_lat,stop_lon\n";
  for (const auto& st : s.stops)
    stops += fmt::format("{},{},{},{}\n", st.id, st.id, st.location.y, st.location.x);
  write_file(dir / "stops.txt", stops);
  write_file(dir / "routes.txt", "route_id,route_short_name,route_type\nR,R,3\n");
  write_file(dir / "calendar.txt",
             "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n"
             "D,1,1,1,1,1,1,1,20240101,20241231\n");
  std::string trips = "route_id,service_id,trip_id\n";
  std::string times = "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n";
  for (const auto& t : s.trips) {
    trips += fmt::format("R,D,{}\n", t.id);
    for (const auto& st : t.stop_times)
      times += fmt::format("{},{},{},{},{}\n", t.id, feedacc::format_hms(st.arrival),
                           feedacc::format_hms(st.departure), s.stops[static_cast<std::size_t>(st.stop)].id,
                           st.sequence);
  }
  write_file(dir / "trips.txt", trips);
  write_file(dir / "stop_times.txt", times);
}

struct RandomFeed {
  feedacc::Schedule schedule;
  oracle::WalkRules rules;
};

/// Up to 5 stops in a `extent` square, up to 6 trips over 2-4 distinct
/// stops, and a few random stop-to-stop walk overrides.
inline RandomFeed random_feed(std::mt19937_64& rng, double extent = 3000.0, Seconds t0 = 6 * 3600) {
  std::uniform_real_distribution<double> coord(0.0, extent);
  std::uniform_int_distribution<int> n_stops(2, 5), n_trips(1, 6);
  RandomFeed f;
  const int ns = n_stops(rng);
  for (int i = 0; i < ns; ++i) f.schedule.add_stop({fmt::format("S{}", i), {coord(rng), coord(rng)}});
  const int nt = n_trips(rng);
  for (int t = 0; t < nt; ++t) {
    std::vector<int> order(static_cast<std::size_t>(ns));
    for (int i = 0; i < ns; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const int len = std::uniform_int_distribution<int>(2, std::min(4, ns))(rng);
    feedacc::ScheduledTrip trip{fmt::format("T{}", t), "R", "D", {}};
    Seconds clock = t0 + std::uniform_int_distribution<Seconds>(0, 3600)(rng);
    for (int k = 0; k < len; ++k) {
      if (k > 0) clock += std::uniform_int_distribution<Seconds>(60, 900)(rng);
      const Seconds dwell = std::uniform_int_distribution<Seconds>(0, 60)(rng);
      trip.stop_times.push_back({order[static_cast<std::size_t>(k)], clock, clock + dwell, k + 1});
      clock += dwell;
    }
    f.schedule.trips.push_back(std::move(trip));
  }
  const int links = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int l = 0; l < links; ++l) {
    const int a = std::uniform_int_distribution<int>(0, ns - 1)(rng);
    const int b = std::uniform_int_distribution<int>(0, ns - 1)(rng);
    if (a == b) continue;
    f.rules.overrides[{a, b}] = std::uniform_int_distribution<Seconds>(0, 1200)(rng);
  }
  return f;
}

}  // namespace testutil
