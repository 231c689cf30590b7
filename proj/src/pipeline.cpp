#include "feedacc/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "feedacc/accessibility.hpp"
#include "feedacc/csv.hpp"
#include "feedacc/geostat.hpp"
#include "feedacc/gtfs.hpp"
#include "feedacc/ingest.hpp"
#include "feedacc/synth.hpp"
#include "feedacc/tessellation.hpp"
#include "feedacc/transit_graph.hpp"

namespace feedacc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::Tessellate, "tessellate"}, {Stage::Ingest, "ingest"},
    {Stage::Estimate, "estimate"},     {Stage::Synthesize, "synthesize"},
    {Stage::Score, "score"},           {Stage::Diff, "diff"},
};

std::string safe_name(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return out;
}

std::string slot_tag(Seconds t) {
  return fmt::format("{:02}{:02}{:02}", t / 3600, (t / 60) % 60, t % 60);
}

std::vector<std::string> stop_ids_of(const fs::path& gtfs_dir) {
  const CsvTable t = read_csv(gtfs_dir / "stops.txt");
  const auto c = t.require("stop_id");
  std::vector<std::string> ids;
  for (const auto& r : t.rows()) ids.push_back(r[c]);
  return ids;
}

// Bounding box of the feed's stops and the hubs, in input coordinates.
BBox derive_bbox(const RunConfig& c) {
  std::optional<BBox> box;
  auto add = [&](double a, double b) {
    if (box) box->extend({a, b});
    else box = BBox::around({a, b});
  };
  const CsvTable stops = read_csv(c.gtfs_dir / "stops.txt");
  const auto s_lon = stops.require("stop_lon");
  const auto s_lat = stops.require("stop_lat");
  for (const auto& r : stops.rows())
    add(parse_double(r[s_lon], "stop_lon"), parse_double(r[s_lat], "stop_lat"));
  const CsvTable hubs = read_csv(c.hubs_csv);
  const auto h_lon = hubs.require("lon");
  const auto h_lat = hubs.require("lat");
  for (const auto& r : hubs.rows()) add(parse_double(r[h_lon], "lon"), parse_double(r[h_lat], "lat"));
  if (!box) throw InvalidParameter("no bbox configured and no stops or hubs to derive one from");
  return *box;
}

}  // namespace

std::string_view to_string(Stage s) {
  for (const auto& [stage, name] : kStageNames)
    if (stage == s) return name;
  return "unknown";
}

Stage parse_stage(std::string_view text) {
  for (const auto& [stage, name] : kStageNames)
    if (name == text) return stage;
  throw InvalidParameter(fmt::format("unknown stage '{}'", text));
}

std::string_view to_string(Feed f) { return f == Feed::Base ? "base" : "augmented"; }

Feed parse_feed(std::string_view text) {
  if (text == "base") return Feed::Base;
  if (text == "augmented") return Feed::Augmented;
  throw InvalidParameter(fmt::format("unknown feed '{}' (expected base or augmented)", text));
}

StageError::StageError(Stage stage, const std::string& message)
    : Error(fmt::format("[{}] {}", to_string(stage), message)), stage_(stage) {}

std::string scores_csv_name(Feed feed) { return fmt::format("scores_{}.csv", to_string(feed)); }

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

fs::path Pipeline::out(std::string_view name) const { return config_.out_dir / name; }

fs::path Pipeline::require(std::string_view name) const {
  const fs::path p = out(name);
  if (!fs::exists(p)) throw FormatError(fmt::format("missing upstream artifact '{}'", p.string()));
  return p;
}

void Pipeline::merge_report(const std::string& key, const json& counts) const {
  json report = json::object();
  const fs::path path = out(artifact::kReport);
  if (fs::exists(path)) {
    std::ifstream in(path);
    report = json::parse(in, nullptr, false);
    if (report.is_discarded() || !report.is_object()) report = json::object();
  }
  report[key] = counts;
  report["parameters"] = {
      {"hex_side", config_.hex_side},
      {"tau", config_.tau},
      {"slot_length", config_.slot_length},
      {"walk_speed", config_.walk_speed},
      {"max_walk", config_.max_walk},
      {"min_headway_floor", config_.min_headway_floor},
      {"anchor", config_.anchor},
      {"min_obs_for_kriging", config_.min_obs_for_kriging},
      {"variogram_family", to_string(config_.variogram_family)},
      {"fallback", config_.fallback == FallbackRule::Mean ? "mean" : "nearest"},
      {"snap_radius", config_.snap_radius},
      {"sample_step", config_.sample_step},
      {"transfer_buffer", config_.transfer_buffer},
      {"service_date", config_.service_date},
  };
  std::ofstream o(path);
  if (!o) throw FormatError(fmt::format("cannot write '{}'", path.string()));
  o << report.dump(2) << '\n';
}

json Pipeline::run(Stage stage, Feed feed) {
  const auto start = std::chrono::steady_clock::now();
  json counts;
  try {
    validate(config_);
    fs::create_directories(config_.out_dir);
    switch (stage) {
      case Stage::Tessellate: counts = tessellate(); break;
      case Stage::Ingest: counts = ingest(); break;
      case Stage::Estimate: counts = estimate(); break;
      case Stage::Synthesize: counts = synthesize(); break;
      case Stage::Score: counts = score(feed); break;
      case Stage::Diff: counts = diff(); break;
    }
    std::string key(to_string(stage));
    if (stage == Stage::Score) key += fmt::format("_{}", to_string(feed));
    merge_report(key, counts);
  } catch (const std::exception& e) {
    std::error_code ec;
    if (fs::is_directory(config_.out_dir, ec)) {
      std::ofstream marker(out(artifact::kStale));
      marker << to_string(stage) << ": " << e.what() << '\n';
    }
    throw StageError(stage, e.what());
  }
  const fs::path stale = out(artifact::kStale);
  if (fs::exists(stale)) {
    std::ifstream in(stale);
    std::string failed;
    std::getline(in, failed, ':');
    in.close();
    if (failed == to_string(stage)) fs::remove(stale);
  }
  if (timer_)
    timer_(stage, feed, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return counts;
}

json Pipeline::run_all() {
  validate(config_);
  fs::create_directories(config_.out_dir);
  fs::remove(out(artifact::kReport));
  run(Stage::Tessellate);
  run(Stage::Ingest);
  run(Stage::Estimate);
  run(Stage::Synthesize);
  run(Stage::Score, Feed::Base);
  run(Stage::Score, Feed::Augmented);
  run(Stage::Diff);
  fs::remove(out(artifact::kStale));
  std::ifstream in(out(artifact::kReport));
  return json::parse(in);
}

json Pipeline::tessellate() {
  const BBox input_box = config_.bbox ? *config_.bbox : derive_bbox(config_);
  const Projection proj =
      config_.metric_coordinates ? Projection::metric_identity() : Projection::centered_on(input_box);
  BBox box = BBox::around(proj.forward(input_box.min.x, input_box.min.y));
  box.extend(proj.forward(input_box.max.x, input_box.max.y));
  Grid grid = feedacc::tessellate(box, config_.hex_side);

  json counts = {{"cells", grid.size()}};
  if (!config_.people_csv.empty()) {
    const auto people = read_people(config_.people_csv, proj);
    const auto n = assign_opportunities(grid, people);
    counts["people_located"] = n.located;
    counts["people_out_of_bounds"] = n.out_of_bounds;
  } else {
    for (const auto& cell : grid.cells()) grid.set_opportunities(cell.id, 1);
  }
  counts["opportunities"] = grid.total_opportunities();
  write_grid_json(out(artifact::kGrid), grid, proj);
  write_grid_geojson(out(artifact::kGridGeojson), grid, proj);
  return counts;
}

json Pipeline::ingest() {
  Projection proj;
  const Grid grid = read_grid_json(require(artifact::kGrid), &proj);
  const auto hubs = load_hubs(config_.hubs_csv, proj);
  validate_hubs(hubs, stop_ids_of(config_.gtfs_dir));

  IngestOptions opts;
  opts.snap_radius = config_.snap_radius;
  opts.max_wait = config_.max_wait;
  const IngestResult r = load_observations(config_.observations_csv, hubs, proj, opts, &grid);

  write_observations(out(artifact::kObservations), r.observations);
  write_rejects(out(artifact::kRejects), r.rejects);

  std::vector<FeederArea> areas;
  json hub_counts = json::object();
  for (const auto& h : hubs) {
    areas.push_back(feeder_area(h, r.observations, grid));
    hub_counts[h.id] = {{"feeder_cells", areas.back().cell_ids.size()},
                        {"feeder_radius", areas.back().radius}};
  }
  write_feeder_areas(out(artifact::kFeederAreas), areas);

  std::map<std::string, std::size_t> reasons;
  for (const auto& rej : r.rejects) ++reasons[rej.reason];
  return {{"rows_total", r.total_rows},
          {"access", r.count(Direction::Access)},
          {"egress", r.count(Direction::Egress)},
          {"rejected", r.rejects.size()},
          {"reject_reasons", reasons},
          {"hubs", hub_counts}};
}

json Pipeline::estimate() {
  Projection proj;
  const Grid grid = read_grid_json(require(artifact::kGrid), &proj);
  const auto obs = read_observations(require(artifact::kObservations));
  const auto areas = read_feeder_areas(require(artifact::kFeederAreas));
  const auto hubs = load_hubs(config_.hubs_csv, proj);

  std::map<std::string, const Hub*> hub_by_id;
  for (const auto& h : hubs) hub_by_id[h.id] = &h;
  std::map<std::string, const FeederArea*> area_by_hub;
  for (const auto& a : areas) area_by_hub[a.hub_id] = &a;

  const auto buckets = group_by_timeslot(obs, config_.slot_length);
  std::vector<BucketInput> inputs;
  for (const auto& [key, bucket] : buckets) {
    const auto h = hub_by_id.find(key.hub_id);
    const auto a = area_by_hub.find(key.hub_id);
    if (h == hub_by_id.end())
      throw FormatError(fmt::format("observation refers to unknown hub '{}'", key.hub_id));
    if (a == area_by_hub.end())
      throw FormatError(fmt::format("no feeder area for hub '{}'", key.hub_id));
    inputs.push_back({key, bucket, a->second, h->second});
  }

  KrigingConfig kc;
  kc.family = config_.variogram_family;
  kc.min_obs_for_kriging = config_.min_obs_for_kriging;
  kc.lag_bins = config_.lag_bins;
  kc.fallback = config_.fallback;
  const auto results = krige_buckets(inputs, grid, kc, config_.workers);

  write_estimates(out(artifact::kEstimates), results);
  write_diagnostics(out(artifact::kDiagnosticsWait), results, false);
  write_diagnostics(out(artifact::kDiagnosticsTravel), results, true);

  const fs::path vdir = out(artifact::kVariograms);
  fs::remove_all(vdir);
  fs::create_directories(vdir);
  std::size_t kriged = 0, wait_fallback = 0, travel_fallback = 0, clamped = 0, estimates = 0;
  json stationarity = json::array();
  for (const auto& r : results) {
    const std::string stem = fmt::format("{}_{}_{}", safe_name(r.key.hub_id),
                                         to_string(r.key.direction), slot_tag(r.key.slot_start));
    write_variogram_csv(vdir / (stem + "_wait.csv"), r.wait.variogram);
    write_variogram_csv(vdir / (stem + "_travel.csv"), r.travel.variogram);
    const bool wk = r.wait.method == EstimateMethod::Kriging;
    const bool tk = r.travel.method == EstimateMethod::Kriging;
    kriged += wk && tk;
    wait_fallback += !wk;
    travel_fallback += !tk;
    clamped += r.wait.clamped_count + r.travel.clamped_count;
    estimates += r.estimates.size();
    stationarity.push_back({{"hub", r.key.hub_id},
                            {"direction", to_string(r.key.direction)},
                            {"t_k", r.key.slot_start},
                            {"near_mean", r.stationarity.near_mean},
                            {"far_mean", r.stationarity.far_mean}});
  }
  return {{"buckets", results.size()},
          {"buckets_kriged", kriged},
          {"buckets_fallback", results.size() - kriged},
          {"wait_fallback", wait_fallback},
          {"travel_fallback", travel_fallback},
          {"clamped_estimates", clamped},
          {"estimates", estimates},
          {"travel_stationarity", stationarity}};
}

json Pipeline::synthesize() {
  Projection proj;
  const Grid grid = read_grid_json(require(artifact::kGrid), &proj);
  const auto estimates = read_estimates(require(artifact::kEstimates), config_.slot_length);
  const auto hubs = load_hubs(config_.hubs_csv, proj);

  SynthOptions opts;
  opts.anchor = config_.anchor;
  opts.headway_floor = config_.min_headway_floor;
  const auto batch = feedacc::synthesize(estimates, config_.slot_length, opts);

  write_virtual_trips(out(artifact::kVirtualTrips), batch.trips);
  const fs::path gtfs_out = out(artifact::kAugmentedGtfs);
  fs::remove_all(gtfs_out);
  emit_gtfs(batch.trips, grid, hubs, proj, config_.gtfs_dir, gtfs_out, config_.service_date);
  return {{"trips_emitted", batch.trips.size()},
          {"trips_dropped", batch.dropped},
          {"empty_synthesis", batch.trips.empty()}};
}

json Pipeline::score(Feed feed) {
  Projection proj;
  const Grid grid = read_grid_json(require(artifact::kGrid), &proj);
  const fs::path dir = feed == Feed::Base ? config_.gtfs_dir : require(artifact::kAugmentedGtfs);

  GtfsOptions gopts;
  gopts.projection = proj;
  gopts.service_date = config_.service_date;
  const Schedule schedule = parse_gtfs(dir, gopts);

  WalkParams wp;
  wp.walk_speed = config_.walk_speed;
  wp.max_walk = config_.max_walk;
  WalkModel walk(wp);
  if (!config_.walk_matrix.empty()) walk.load_matrix(config_.walk_matrix, schedule);
  GraphOptions graph_opts;
  graph_opts.transfer_buffer = config_.transfer_buffer;
  const auto graph = build_graph(schedule, walk, graph_opts);
  const Router router(graph, grid);

  std::vector<PeriodScores> all;
  for (const auto& p : config_.periods)
    all.push_back({p, score_period(router, p, config_.sample_step, config_.tau, config_.workers)});

  write_scores_csv(out(scores_csv_name(feed)), all);
  json periods = json::object();
  for (const auto& ps : all) {
    std::map<CellId, double> values;
    double sum = 0.0;
    for (const auto& s : ps.scores) {
      values[s.cell] = s.score;
      sum += s.score;
    }
    write_cell_values_geojson(
        out(fmt::format("scores_{}_{}.geojson", to_string(feed), safe_name(ps.period.name))), grid,
        proj, values, "score");
    periods[ps.period.name] = {{"mean_score", ps.scores.empty() ? 0.0 : sum / ps.scores.size()}};
  }
  return {{"cells_scored", grid.size()},
          {"stops", graph.stops().size()},
          {"trips", graph.trip_ids().size()},
          {"nodes", graph.nodes().size()},
          {"edges", graph.edges().size()},
          {"periods", periods}};
}

json Pipeline::diff() {
  Projection proj;
  const Grid grid = read_grid_json(require(artifact::kGrid), &proj);
  const auto base = read_scores_csv(require(scores_csv_name(Feed::Base)));
  const auto aug = read_scores_csv(require(scores_csv_name(Feed::Augmented)));
  if (base.size() != aug.size())
    throw InvalidParameter("base and augmented scores cover different periods");

  std::ofstream csv(out(artifact::kImprovement), std::ios::binary);
  if (!csv) throw FormatError(fmt::format("cannot write '{}'", out(artifact::kImprovement).string()));
  write_csv_row(csv, {"cell_id", "period", "base", "augmented", "delta"});
  json periods = json::object();
  for (const auto& [name, base_scores] : base) {
    const auto it = aug.find(name);
    if (it == aug.end()) throw InvalidParameter(fmt::format("period '{}' missing from augmented scores", name));
    const auto delta = improvement(base_scores, it->second);
    std::size_t improved = 0;
    double max_delta = 0.0, sum = 0.0;
    for (const auto& [cell, d] : delta) {
      write_csv_row(csv, {std::to_string(cell), name, fmt::format("{}", base_scores.at(cell)),
                          fmt::format("{}", it->second.at(cell)), fmt::format("{}", d)});
      improved += d > 0.0;
      max_delta = std::max(max_delta, d);
      sum += d;
    }
    write_cell_values_geojson(out(fmt::format("improvement_{}.geojson", safe_name(name))), grid,
                              proj, delta, "delta");
    periods[name] = {{"cells", delta.size()},
                     {"cells_improved", improved},
                     {"max_delta", max_delta},
                     {"mean_delta", delta.empty() ? 0.0 : sum / delta.size()}};
  }
  return {{"periods", periods}};
}

json run_pipeline(const RunConfig& config) {
  Pipeline p(config);
  return p.run_all();
}

}  // namespace feedacc
