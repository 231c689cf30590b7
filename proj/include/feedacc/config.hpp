#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feedacc/accessibility.hpp"
#include "feedacc/geometry.hpp"
#include "feedacc/geostat.hpp"
#include "feedacc/timefmt.hpp"

namespace feedacc {

/// Parameters and paths for one pipeline run. Defaults: 1 km hexagons,
/// 1 h timeslots, 60 min budget, 15 min walks at 5 km/h.
struct RunConfig {
  std::filesystem::path gtfs_dir;
  std::filesystem::path observations_csv;
  std::filesystem::path hubs_csv;
  std::filesystem::path people_csv;   // optional
  std::filesystem::path walk_matrix;  // optional
  std::filesystem::path out_dir = "out";

  std::optional<BBox> bbox;  // lon/lat, or meters with metric_coordinates
  bool metric_coordinates = false;

  double hex_side = 1000.0;
  Seconds tau = kDefaultTau;
  Seconds slot_length = 3600;
  double walk_speed = 5000.0 / 3600.0;
  Seconds max_walk = 900;
  Seconds min_headway_floor = 60;
  Seconds anchor = 12 * 3600;
  std::size_t min_obs_for_kriging = 5;
  std::size_t lag_bins = 10;
  VariogramFamily variogram_family = VariogramFamily::Spherical;
  FallbackRule fallback = FallbackRule::Mean;
  double snap_radius = 50.0;
  std::optional<double> max_wait;
  std::vector<Period> periods;
  Seconds sample_step = kDefaultSampleStep;
  Seconds transfer_buffer = 0;
  std::string service_date;  // YYYYMMDD, empty = all services
  int workers = 0;           // 0 = OpenMP default

  static RunConfig with_default_periods();
};

/// Reads `key = value` lines (`#` comments, quoted strings, numbers,
/// booleans, `[a, b, c, d]` arrays, `period.<name> = "HH:MM:SS-HH:MM:SS"`).
/// Relative paths resolve against the file's directory. Throws
/// InvalidParameter or FormatError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::string_view source = "<config>");

/// Applies one `key=value` override (same value syntax as the file).
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

/// Throws InvalidParameter unless every parameter is positive and the
/// periods are non-overlapping half-open intervals inside the day.
void validate(const RunConfig& config);

}  // namespace feedacc
