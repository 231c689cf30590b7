#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "feedacc/config.hpp"
#include "feedacc/error.hpp"

namespace feedacc {

enum class Stage { Tessellate, Ingest, Estimate, Synthesize, Score, Diff };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

enum class Feed { Base, Augmented };
std::string_view to_string(Feed f);
Feed parse_feed(std::string_view text);

/// A failure inside a pipeline stage; what() is prefixed with `[stage]`.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& message);
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

// Artifact names inside out_dir.
namespace artifact {
inline constexpr const char* kGrid = "grid.json";
inline constexpr const char* kGridGeojson = "grid.geojson";
inline constexpr const char* kObservations = "observations_classified.csv";
inline constexpr const char* kRejects = "rejects.csv";
inline constexpr const char* kFeederAreas = "feeder_areas.csv";
inline constexpr const char* kEstimates = "estimates.csv";
inline constexpr const char* kDiagnosticsWait = "diagnostics_wait.csv";
inline constexpr const char* kDiagnosticsTravel = "diagnostics_travel.csv";
inline constexpr const char* kVariograms = "variograms";
inline constexpr const char* kVirtualTrips = "virtual_trips.csv";
inline constexpr const char* kAugmentedGtfs = "gtfs_augmented";
inline constexpr const char* kImprovement = "improvement.csv";
inline constexpr const char* kReport = "run_report.json";
inline constexpr const char* kStale = "STALE";
}  // namespace artifact

std::string scores_csv_name(Feed feed);

/// Runs stages over the files in `config.out_dir`. Each stage reads the
/// artifacts of earlier stages, writes its own and merges its counts into
/// run_report.json. A failed stage leaves a STALE marker naming it.
class Pipeline {
 public:
  using StageTimer = std::function<void(Stage, Feed, double seconds)>;

  explicit Pipeline(RunConfig config);

  nlohmann::json run(Stage stage, Feed feed = Feed::Base);
  /// Every stage in order, scoring both feeds. Returns the full report.
  nlohmann::json run_all();

  /// Called after each stage with its wall-clock duration.
  void set_timer(StageTimer timer) { timer_ = std::move(timer); }
  const RunConfig& config() const { return config_; }

 private:
  nlohmann::json tessellate();
  nlohmann::json ingest();
  nlohmann::json estimate();
  nlohmann::json synthesize();
  nlohmann::json score(Feed feed);
  nlohmann::json diff();

  std::filesystem::path out(std::string_view name) const;
  std::filesystem::path require(std::string_view name) const;
  void merge_report(const std::string& key, const nlohmann::json& counts) const;

  RunConfig config_;
  StageTimer timer_;
};

/// Convenience wrapper: validates and runs every stage.
nlohmann::json run_pipeline(const RunConfig& config);

}  // namespace feedacc
