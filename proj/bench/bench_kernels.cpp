#include <benchmark/benchmark.h>

#include <random>

#include "feedacc/accessibility.hpp"
#include "feedacc/geostat.hpp"
#include "feedacc/gtfs.hpp"
#include "feedacc/transit_graph.hpp"

using namespace feedacc;

namespace {

// A grid of bus lines over a 12 x 12 km area.
struct Network {
  Grid grid = tessellate({{0, 0}, {12000, 12000}}, 1000);
  Schedule schedule;
  TimeExpandedGraph graph;

  Network() {
    for (int i = 0; i < 13; ++i)
      for (int j = 0; j < 13; ++j)
        schedule.add_stop({"S" + std::to_string(i) + "_" + std::to_string(j), {1000.0 * i, 1000.0 * j}});
    int trip = 0;
    for (int line = 0; line < 13; ++line) {
      for (Seconds t0 = 6 * 3600; t0 < 10 * 3600; t0 += 600) {
        for (int dir = 0; dir < 2; ++dir) {
          ScheduledTrip h{"T" + std::to_string(trip++), "R", "D", {}};
          ScheduledTrip v{"T" + std::to_string(trip++), "R", "D", {}};
          for (int k = 0; k < 13; ++k) {
            const int p = dir ? 12 - k : k;
            const Seconds t = t0 + 150 * k;
            h.stop_times.push_back({line * 13 + p, t, t, k + 1});
            v.stop_times.push_back({p * 13 + line, t, t, k + 1});
          }
          schedule.trips.push_back(std::move(h));
          schedule.trips.push_back(std::move(v));
        }
      }
    }
    graph = build_graph(schedule, WalkModel{});
    std::mt19937_64 rng(1);
    for (const auto& c : grid.cells()) grid.set_opportunities(c.id, static_cast<std::int64_t>(rng() % 500));
  }
};

const Network& network() {
  static const Network n;
  return n;
}

const Period kPeriod{"morning", 7 * 3600, 8 * 3600};

void BM_ScorePeriodSerial(benchmark::State& state) {
  const Router router(network().graph, network().grid);
  for (auto _ : state) benchmark::DoNotOptimize(score_period_serial(router, kPeriod));
}

void BM_ScorePeriodParallel(benchmark::State& state) {
  const Router router(network().graph, network().grid);
  for (auto _ : state)
    benchmark::DoNotOptimize(score_period(router, kPeriod, kDefaultSampleStep, kDefaultTau,
                                          static_cast<int>(state.range(0))));
}

struct Buckets {
  Grid grid = tessellate({{0, 0}, {20000, 20000}}, 1000);
  std::vector<Hub> hubs;
  std::vector<std::vector<TripObservation>> obs;
  std::vector<FeederArea> areas;
  std::vector<BucketInput> inputs;

  Buckets() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> c(-4000, 4000);
    for (int h = 0; h < 16; ++h) hubs.push_back({"H" + std::to_string(h), {2500.0 + 5000 * (h % 4), 2500.0 + 5000 * (h / 4)}, ""});
    for (int h = 0; h < 16; ++h) {
      for (int slot = 0; slot < 4; ++slot) {
        std::vector<TripObservation> b;
        for (int i = 0; i < 40; ++i) {
          TripObservation o;
          o.hub_id = hubs[h].id;
          o.origin = {hubs[h].location.x + c(rng), hubs[h].location.y + c(rng)};
          o.destination = hubs[h].location;
          o.wait = 100 + rng() % 600;
          o.travel = 200 + distance(o.origin, o.destination) / 6;
          b.push_back(o);
        }
        obs.push_back(std::move(b));
      }
    }
    for (std::size_t i = 0; i < obs.size(); ++i) areas.push_back(feeder_area(hubs[i / 4], obs[i], grid));
    for (std::size_t i = 0; i < obs.size(); ++i)
      inputs.push_back({{hubs[i / 4].id, Direction::Access, static_cast<Seconds>(3600 * (i % 4)), 3600}, obs[i],
                        &areas[i], &hubs[i / 4]});
  }
};

const Buckets& buckets() {
  static const Buckets b;
  return b;
}

void BM_KrigeBucketsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(krige_buckets_serial(buckets().inputs, buckets().grid, {}));
}

void BM_KrigeBucketsParallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        krige_buckets(buckets().inputs, buckets().grid, {}, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_ScorePeriodSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScorePeriodParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_KrigeBucketsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KrigeBucketsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
