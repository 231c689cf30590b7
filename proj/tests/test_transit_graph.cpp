#include <gtest/gtest.h>

#include <random>
#include <set>

#include "feedacc/error.hpp"
#include "feedacc/gtfs.hpp"
#include "feedacc/transit_graph.hpp"
#include "test_util.hpp"

using namespace feedacc;

namespace {

void write_basic(const std::filesystem::path& d) {
  testutil::write_file(d / "stops.txt", "stop_id,stop_name,stop_lat,stop_lon\nA,A,0,0\nB,B,0,1000\nC,C,500,2000\n");
  testutil::write_file(d / "routes.txt", "route_id,route_type\nR,3\n");
  testutil::write_file(d / "trips.txt", "route_id,service_id,trip_id\nR,WK,T1\nR,SAT,T2\n");
  testutil::write_file(d / "stop_times.txt",
                       "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
                       "T1,08:00:00,08:00:00,A,1\nT1,,,B,2\nT1,08:10:00,08:10:00,C,3\n"
                       "T2,25:00:00,25:00:00,C,1\nT2,25:05:00,25:05:00,A,2\n");
  testutil::write_file(d / "calendar.txt",
                       "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n"
                       "WK,1,1,1,1,1,0,0,20240101,20241231\nSAT,0,0,0,0,0,1,0,20240101,20241231\n");
}

}  // namespace

TEST(Gtfs, ParsesAndInterpolates) {
  const auto d = testutil::scratch_dir("gtfs_basic");
  write_basic(d);
  const Schedule s = parse_gtfs(d);
  ASSERT_EQ(s.stops.size(), 3u);
  EXPECT_EQ(s.stops[1].location, (Point{1000, 0}));
  ASSERT_EQ(s.trips.size(), 2u);
  const auto& t1 = s.trips[0].stop_times;
  ASSERT_EQ(t1.size(), 3u);
  EXPECT_EQ(t1[1].arrival, 8 * 3600 + 300);
  EXPECT_EQ(s.trips[1].stop_times[0].departure, 25 * 3600);
}

TEST(Gtfs, ServiceDateFilters) {
  const auto d = testutil::scratch_dir("gtfs_service");
  write_basic(d);
  GtfsOptions o;
  o.service_date = "20240611";  // Tuesday
  EXPECT_EQ(parse_gtfs(d, o).trips.size(), 1u);
  o.service_date = "20240615";  // Saturday
  const auto sat = parse_gtfs(d, o);
  ASSERT_EQ(sat.trips.size(), 1u);
  EXPECT_EQ(sat.trips[0].id, "T2");
  testutil::write_file(d / "calendar_dates.txt", "service_id,date,exception_type\nWK,20240615,1\nSAT,20240615,2\n");
  const auto ex = parse_gtfs(d, o);
  ASSERT_EQ(ex.trips.size(), 1u);
  EXPECT_EQ(ex.trips[0].id, "T1");
  EXPECT_EQ(weekday_of("20240611"), 1);
}

TEST(Gtfs, DanglingKeysAreNamed) {
  const auto d = testutil::scratch_dir("gtfs_dangling");
  write_basic(d);
  testutil::write_file(d / "stop_times.txt",
                       "trip_id,arrival_time,departure_time,stop_id,stop_sequence\nT1,08:00:00,08:00:00,ZZ,1\n");
  try {
    parse_gtfs(d);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("ZZ"), std::string::npos);
  }
  std::filesystem::remove(d / "calendar.txt");
  EXPECT_THROW(parse_gtfs(d), FormatError);
}

TEST(Gtfs, FrequenciesExpand) {
  const auto d = testutil::scratch_dir("gtfs_freq");
  write_basic(d);
  testutil::write_file(d / "frequencies.txt", "trip_id,start_time,end_time,headway_secs\nT1,08:00:00,09:00:00,1200\n");
  GtfsOptions o;
  o.service_date = "20240611";
  const auto s = parse_gtfs(d, o);
  ASSERT_EQ(s.trips.size(), 3u);
  EXPECT_EQ(s.trips[1].stop_times[0].departure, 8 * 3600 + 1200);
  EXPECT_EQ(s.trips[2].stop_times[2].arrival, 8 * 3600 + 2400 + 600);
}

TEST(Walk, SecondsAndReach) {
  WalkParams w;
  EXPECT_EQ(w.walk_seconds(1000), 720);
  EXPECT_EQ(w.walk_seconds(1250), 900);
  EXPECT_TRUE(w.within_reach(w.walk_seconds(1250)));
  EXPECT_FALSE(w.within_reach(w.walk_seconds(1251)));
  EXPECT_EQ(w.walk_seconds(0), 0);
}

namespace {

// Every (arrival stoptime, departure stoptime of another trip) pair whose
// stops are within walking reach and whose times allow the walk.
std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> feasible_transfers(const Schedule& s,
                                                                                 const oracle::WalkRules& r) {
  std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> out;
  for (std::size_t t = 0; t < s.trips.size(); ++t)
    for (std::size_t i = 0; i < s.trips[t].stop_times.size(); ++i)
      for (std::size_t u = 0; u < s.trips.size(); ++u) {
        if (u == t) continue;
        for (std::size_t j = 0; j < s.trips[u].stop_times.size(); ++j) {
          const auto& a = s.trips[t].stop_times[i];
          const auto& d = s.trips[u].stop_times[j];
          const Seconds w = r.stop_to_stop(s, a.stop, d.stop);
          if (w <= r.max_walk && d.departure >= a.arrival + w + r.buffer)
            out.insert({{static_cast<int>(t), static_cast<int>(i)}, {static_cast<int>(u), static_cast<int>(j)}});
        }
      }
  return out;
}

WalkModel model_of(const oracle::WalkRules& r) {
  WalkModel m;
  for (const auto& [k, w] : r.overrides) m.add_override(k.first, k.second, w);
  return m;
}

std::pair<int, int> position(const TimeExpandedGraph& g, const Schedule& s, NodeId n) {
  // Nodes are laid out trip by trip, two per stoptime.
  int base = 0;
  for (std::size_t t = 0; t < s.trips.size(); ++t) {
    const int len = static_cast<int>(s.trips[t].stop_times.size());
    if (n < base + 2 * len) return {static_cast<int>(t), (n - base) / 2};
    base += 2 * len;
  }
  (void)g;
  return {-1, -1};
}

}  // namespace

TEST(Graph, UnprunedTransfersEqualFeasibilityScan) {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 100; ++iter) {
    auto f = testutil::random_feed(rng);
    f.rules.buffer = static_cast<Seconds>(rng() % 120);
    GraphOptions o;
    o.prune_transfers = false;
    o.transfer_buffer = f.rules.buffer;
    const auto g = build_graph(f.schedule, model_of(f.rules), o);
    std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> got;
    for (const auto& e : g.edges())
      if (e.kind == EdgeKind::Transfer) got.insert({position(g, f.schedule, e.from), position(g, f.schedule, e.to)});
    EXPECT_EQ(got, feasible_transfers(f.schedule, f.rules)) << "iteration " << iter;
  }
}

TEST(Graph, RideAndDwellEdges) {
  std::mt19937_64 rng(32);
  const auto f = testutil::random_feed(rng);
  const auto g = build_graph(f.schedule, model_of(f.rules));
  std::size_t rides = 0, dwells = 0, stoptimes = 0;
  for (const auto& t : f.schedule.trips) {
    stoptimes += t.stop_times.size();
    rides += t.stop_times.size() - 1;
  }
  dwells = stoptimes;
  std::size_t r = 0, d = 0;
  for (const auto& e : g.edges()) {
    EXPECT_LE(g.node(e.from).time, g.node(e.to).time);
    if (e.kind == EdgeKind::Ride) ++r;
    if (e.kind == EdgeKind::Dwell) ++d;
  }
  EXPECT_EQ(r, rides);
  EXPECT_EQ(d, dwells);
  EXPECT_EQ(g.nodes().size(), 2 * stoptimes);
  EXPECT_TRUE(std::is_sorted(g.edges().begin(), g.edges().end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to, a.kind) < std::tie(b.from, b.to, b.kind);
  }));
}

TEST(Graph, PrunedKeepsReachability) {
  std::mt19937_64 rng(33);
  for (int iter = 0; iter < 100; ++iter) {
    const auto f = testutil::random_feed(rng);
    GraphOptions full;
    full.prune_transfers = false;
    const auto a = build_graph(f.schedule, model_of(f.rules), full);
    const auto b = build_graph(f.schedule, model_of(f.rules));
    EXPECT_LE(b.edges().size(), a.edges().size());
    for (NodeId src = 0; src < static_cast<NodeId>(a.nodes().size()); ++src) {
      auto reach = [src](const TimeExpandedGraph& g) {
        std::vector<char> seen(g.nodes().size(), 0);
        std::vector<NodeId> st{src};
        seen[static_cast<std::size_t>(src)] = 1;
        while (!st.empty()) {
          const NodeId n = st.back();
          st.pop_back();
          for (const auto& e : g.out_edges(n))
            if (!seen[static_cast<std::size_t>(e.to)]) {
              seen[static_cast<std::size_t>(e.to)] = 1;
              st.push_back(e.to);
            }
        }
        return seen;
      };
      EXPECT_EQ(reach(a), reach(b));
    }
  }
}

TEST(Walk, NeighborsIncludeSelfAndOverrides) {
  std::vector<Stop> stops{{"a", {0, 0}}, {"b", {500, 0}}, {"c", {5000, 0}}};
  WalkModel m;
  m.add_override(0, 2, 100);
  m.add_override(1, 0, 2000);
  const auto n = m.neighbors(stops);
  const std::vector<std::pair<StopIndex, Seconds>> n0{{0, 0}, {1, 360}, {2, 100}};
  EXPECT_EQ(n[0], n0);
  const std::vector<std::pair<StopIndex, Seconds>> n1{{1, 0}};
  EXPECT_EQ(n[1], n1);
}

TEST(Walk, MatrixUnknownStopIsNamed) {
  const auto d = testutil::scratch_dir("walk_matrix");
  Schedule s;
  s.add_stop({"A", {0, 0}});
  testutil::write_file(d / "w.csv", "from_stop_id,to_stop_id,walk_s\nA,Q,30\n");
  WalkModel m;
  try {
    m.load_matrix(d / "w.csv", s);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("'Q'"), std::string::npos);
  }
}
