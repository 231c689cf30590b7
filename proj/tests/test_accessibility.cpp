#include <gtest/gtest.h>

#include <random>

#include "feedacc/accessibility.hpp"
#include "feedacc/error.hpp"
#include "feedacc/synth.hpp"
#include "feedacc/transit_graph.hpp"
#include "test_util.hpp"

using namespace feedacc;

namespace {

WalkModel model_of(const oracle::WalkRules& r) {
  WalkParams p;
  p.walk_speed = r.speed;
  p.max_walk = r.max_walk;
  WalkModel m(p);
  for (const auto& [k, w] : r.overrides) m.add_override(k.first, k.second, w);
  return m;
}

std::vector<Point> centroids(const Grid& g) {
  std::vector<Point> out;
  for (const auto& c : g.cells()) out.push_back(c.centroid);
  return out;
}

}  // namespace

TEST(Route, WalkOnlyBaseline) {
  // Two cell centroids 1000 m apart and one further than 1250 m.
  const Grid g = tessellate({{0, 0}, {3000, 3000}}, 1000 / std::sqrt(3.0));
  const Schedule empty;
  const auto graph = build_graph(empty, WalkModel{});
  const Point origin = g.cell(0).centroid;
  const auto prof = earliest_arrival(graph, origin, 8 * 3600, g);
  EXPECT_EQ(prof.origin, 0);
  EXPECT_EQ(prof.arrivals[0], 8 * 3600);
  bool saw_1000 = false, saw_far = false;
  for (const auto& c : g.cells()) {
    const double d = distance(origin, c.centroid);
    const Seconds a = prof.arrivals[static_cast<std::size_t>(c.id)];
    if (std::abs(d - 1000) < 1e-6) {
      saw_1000 = true;
      EXPECT_EQ(a - 8 * 3600, 720);
    }
    if (d > 1250) {
      saw_far = true;
      EXPECT_EQ(a, kUnreachable);
    }
  }
  EXPECT_TRUE(saw_1000);
  EXPECT_TRUE(saw_far);
}

TEST(Route, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(41);
  for (int iter = 0; iter < 150; ++iter) {
    auto f = testutil::random_feed(rng);
    f.rules.buffer = static_cast<Seconds>(rng() % 90);
    GraphOptions o;
    o.transfer_buffer = f.rules.buffer;
    const auto graph = build_graph(f.schedule, model_of(f.rules), o);
    const Grid g = tessellate({{0, 0}, {3000, 3000}}, 600);
    const Router router(graph, g);
    const auto targets = centroids(g);
    for (int q = 0; q < 6; ++q) {
      const CellId oc = static_cast<CellId>(rng() % g.size());
      const Seconds t = 6 * 3600 + static_cast<Seconds>(rng() % 5400);
      const auto got = router.earliest_arrival(g.cell(oc).centroid, t);
      const auto ref = oracle::earliest_arrival(f.schedule, f.rules, g.cell(oc).centroid, t, targets, oc);
      ASSERT_EQ(got.arrivals, ref) << "iteration " << iter << " query " << q;
    }
  }
}

TEST(Route, HorizonCutsLateArrivals) {
  std::mt19937_64 rng(42);
  const auto f = testutil::random_feed(rng);
  const auto graph = build_graph(f.schedule, model_of(f.rules));
  const Grid g = tessellate({{0, 0}, {3000, 3000}}, 600);
  const Router router(graph, g);
  const auto full = router.earliest_arrival(g.cell(3).centroid, 6 * 3600);
  const auto cut = router.earliest_arrival(g.cell(3).centroid, 6 * 3600, 1800);
  for (std::size_t c = 0; c < full.arrivals.size(); ++c) {
    if (full.arrivals[c] <= 6 * 3600 + 1800) EXPECT_EQ(cut.arrivals[c], full.arrivals[c]);
    else EXPECT_EQ(cut.arrivals[c], kUnreachable);
  }
}

TEST(Route, LaterDepartureNeverArrivesEarlier) {
  std::mt19937_64 rng(43);
  for (int iter = 0; iter < 30; ++iter) {
    const auto f = testutil::random_feed(rng);
    const auto graph = build_graph(f.schedule, model_of(f.rules));
    const Grid g = tessellate({{0, 0}, {3000, 3000}}, 700);
    const Router router(graph, g);
    for (CellId o = 0; o < static_cast<CellId>(g.size()); ++o) {
      std::vector<Seconds> prev;
      for (Seconds t = 6 * 3600; t < 8 * 3600; t += 300) {
        const auto p = router.earliest_arrival(g.cell(o).centroid, t);
        if (!prev.empty())
          for (std::size_t c = 0; c < prev.size(); ++c) EXPECT_GE(p.arrivals[c], prev[c]);
        prev = p.arrivals;
      }
    }
  }
}

TEST(Score, CountsOpportunitiesWithinTau) {
  Grid g = tessellate({{0, 0}, {2000, 2000}}, 1000);
  for (const auto& c : g.cells()) g.set_opportunities(c.id, c.id + 1);
  ArrivalProfile p{0, 1000, std::vector<Seconds>(g.size(), kUnreachable)};
  p.arrivals[0] = 1000;
  p.arrivals[1] = 1000 + 3600;
  p.arrivals[2] = 1000 + 3601;
  const auto s = accessibility_score(p, g, 3600);
  EXPECT_EQ(s.score, 1 + 2);
  EXPECT_EQ(s.reachable_cells, 2u);
}

namespace {

struct Scenario {
  Grid grid = tessellate({{0, 0}, {4000, 4000}}, 800);
  testutil::RandomFeed feed;
  std::vector<Hub> hubs;

  explicit Scenario(std::mt19937_64& rng) : feed(testutil::random_feed(rng, 4000, 7 * 3600)) {
    for (auto& c : grid.cells()) grid.set_opportunities(c.id, static_cast<std::int64_t>(rng() % 50));
    for (std::size_t i = 0; i < std::min<std::size_t>(2, feed.schedule.stops.size()); ++i)
      hubs.push_back({fmt::format("H{}", i), feed.schedule.stops[i].location, feed.schedule.stops[i].id});
  }
};

}  // namespace

TEST(Score, SerialAndParallelAgree) {
  std::mt19937_64 rng(44);
  for (int iter = 0; iter < 5; ++iter) {
    Scenario sc(rng);
    const auto graph = build_graph(sc.feed.schedule, model_of(sc.feed.rules));
    const Router router(graph, sc.grid);
    const Period p{"m", 7 * 3600, 8 * 3600};
    const auto a = score_period_serial(router, p, 600, 1800);
    for (int w : {1, 3}) {
      const auto b = score_period(router, p, 600, 1800, w);
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].cell, b[i].cell);
        EXPECT_EQ(a[i].score, b[i].score);
        EXPECT_EQ(a[i].reachable_cells, b[i].reachable_cells);
      }
    }
  }
}

TEST(Score, PeriodValidation) {
  std::mt19937_64 rng(1);
  Scenario sc(rng);
  const auto graph = build_graph(sc.feed.schedule, WalkModel{});
  const Router router(graph, sc.grid);
  EXPECT_THROW(score_period(router, {"x", 100, 100}), InvalidParameter);
  EXPECT_THROW(score_period(router, {"x", 0, 1000}, 600), InvalidParameter);
}

TEST(Improvement, AddingVirtualTripsNeverHurts) {
  std::mt19937_64 rng(45);
  for (int iter = 0; iter < 20; ++iter) {
    Scenario sc(rng);
    const auto base_graph = build_graph(sc.feed.schedule, model_of(sc.feed.rules));

    std::vector<FieldEstimate> est;
    for (const auto& h : sc.hubs)
      for (const auto& c : sc.grid.cells())
        if (distance(c.centroid, h.location) < 2500)
          for (auto dir : {Direction::Access, Direction::Egress})
            est.push_back({{h.id, dir, 7 * 3600, 3600}, c.id, 200.0 + rng() % 400, 100.0 + rng() % 900, 5,
                           EstimateMethod::Kriging});
    const auto batch = synthesize(est, 3600);
    Schedule aug = sc.feed.schedule;
    std::map<CellId, StopIndex> vstop;
    for (const auto& t : batch.trips) {
      if (!vstop.contains(t.cell)) vstop[t.cell] = aug.add_stop({virtual_stop_id(t.cell), sc.grid.cell(t.cell).centroid});
      const StopIndex hub = *aug.find_stop(std::find_if(sc.hubs.begin(), sc.hubs.end(), [&](const Hub& h) {
                                             return h.id == t.hub_id;
                                           })->gtfs_stop_id);
      const StopIndex a = t.direction == Direction::Access ? vstop[t.cell] : hub;
      const StopIndex b = t.direction == Direction::Access ? hub : vstop[t.cell];
      aug.trips.push_back({t.trip_id, "V", "V", {{a, t.depart, t.depart, 1}, {b, t.arrive, t.arrive, 2}}});
    }
    const auto aug_graph = build_graph(aug, model_of(sc.feed.rules));
    const Router rb(base_graph, sc.grid), ra(aug_graph, sc.grid);
    for (const auto& c : sc.grid.cells()) {
      for (Seconds t = 7 * 3600; t < 8 * 3600; t += 900) {
        const auto pb = rb.earliest_arrival(c.centroid, t, 3600);
        const auto pa = ra.earliest_arrival(c.centroid, t, 3600);
        for (std::size_t k = 0; k < pb.arrivals.size(); ++k) ASSERT_LE(pa.arrivals[k], pb.arrivals[k]);
        EXPECT_GE(accessibility_score(pa, sc.grid).score, accessibility_score(pb, sc.grid).score);
      }
    }
  }
}

TEST(Improvement, IdenticalScoresGiveZero) {
  const std::map<CellId, double> a{{0, 3.5}, {1, 0}, {2, 7}};
  for (const auto& [c, d] : improvement(a, a)) EXPECT_EQ(d, 0.0);
  EXPECT_THROW(improvement(a, {{0, 1}}), InvalidParameter);
  EXPECT_THROW(improvement(a, {{0, 1}, {1, 1}, {5, 1}}), InvalidParameter);
}

TEST(ScoresCsv, RoundTrip) {
  const auto dir = testutil::scratch_dir("scores_csv");
  const std::vector<PeriodScores> s{{{"morning", 0, 600}, {{0, 1.5, 2}, {1, 1.0 / 3, 1}}}};
  write_scores_csv(dir / "s.csv", s);
  const auto back = read_scores_csv(dir / "s.csv");
  EXPECT_EQ(back.at("morning").at(0), 1.5);
  EXPECT_EQ(back.at("morning").at(1), 1.0 / 3);
}
