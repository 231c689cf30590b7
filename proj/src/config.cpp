#include "feedacc/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "feedacc/csv.hpp"
#include "feedacc/error.hpp"
#include "feedacc/gtfs.hpp"

namespace feedacc {

RunConfig RunConfig::with_default_periods() {
  RunConfig c;
  c.periods = {{"morning", 7 * 3600, 10 * 3600},
               {"offpeak", 10 * 3600, 16 * 3600},
               {"evening", 16 * 3600, 19 * 3600}};
  return c;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool parse_bool(std::string_view v, std::string_view key) {
  const std::string s = unquote(v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw InvalidParameter(fmt::format("{}: expected true or false, got '{}'", key, s));
}

double number(std::string_view v, std::string_view key) {
  try {
    return parse_double(unquote(v), key);
  } catch (const FormatError& e) {
    throw InvalidParameter(e.what());
  }
}

long long integer(std::string_view v, std::string_view key) {
  try {
    return parse_int(unquote(v), key);
  } catch (const FormatError& e) {
    throw InvalidParameter(e.what());
  }
}

Seconds seconds(std::string_view v, std::string_view key) {
  const std::string s = unquote(v);
  if (s.find(':') != std::string::npos) return parse_hms(s);
  const long long n = integer(s, key);
  if (n < std::numeric_limits<Seconds>::min() || n > std::numeric_limits<Seconds>::max())
    throw InvalidParameter(fmt::format("{}: value out of range", key));
  return static_cast<Seconds>(n);
}

std::vector<double> number_array(std::string_view v, std::string_view key) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw InvalidParameter(fmt::format("{}: expected [a, b, ...]", key));
  std::vector<double> out;
  std::stringstream ss{std::string(v.substr(1, v.size() - 2))};
  for (std::string item; std::getline(ss, item, ',');) out.push_back(number(item, key));
  return out;
}

std::filesystem::path resolve(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p(unquote(v));
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir) {
  key = trim(key);
  if (key.starts_with("period.")) {
    const std::string name(key.substr(7));
    const std::string range = unquote(value);
    const auto dash = range.find('-');
    if (name.empty() || dash == std::string::npos)
      throw InvalidParameter(fmt::format("{}: expected \"HH:MM:SS-HH:MM:SS\"", key));
    Period p{name, parse_hms(trim(std::string_view(range).substr(0, dash))),
             parse_hms(trim(std::string_view(range).substr(dash + 1)))};
    auto it = std::find_if(c.periods.begin(), c.periods.end(),
                           [&](const Period& q) { return q.name == name; });
    if (it != c.periods.end()) *it = p;
    else c.periods.push_back(p);
    return;
  }
  if (key == "gtfs_dir") c.gtfs_dir = resolve(value, base_dir);
  else if (key == "observations_csv") c.observations_csv = resolve(value, base_dir);
  else if (key == "hubs_csv") c.hubs_csv = resolve(value, base_dir);
  else if (key == "people_csv") c.people_csv = resolve(value, base_dir);
  else if (key == "walk_matrix") c.walk_matrix = resolve(value, base_dir);
  else if (key == "out_dir") c.out_dir = resolve(value, base_dir);
  else if (key == "bbox") {
    const auto v = number_array(value, key);
    if (v.size() != 4) throw InvalidParameter("bbox: expected [min_x, min_y, max_x, max_y]");
    c.bbox = BBox{{v[0], v[1]}, {v[2], v[3]}};
  } else if (key == "metric_coordinates") c.metric_coordinates = parse_bool(value, key);
  else if (key == "hex_side") c.hex_side = number(value, key);
  else if (key == "tau") c.tau = seconds(value, key);
  else if (key == "slot_length") c.slot_length = seconds(value, key);
  else if (key == "walk_speed") c.walk_speed = number(value, key);
  else if (key == "max_walk") c.max_walk = seconds(value, key);
  else if (key == "min_headway_floor") c.min_headway_floor = seconds(value, key);
  else if (key == "anchor") c.anchor = seconds(value, key);
  else if (key == "min_obs_for_kriging") {
    const auto n = integer(value, key);
    if (n <= 0) throw InvalidParameter("min_obs_for_kriging must be positive");
    c.min_obs_for_kriging = static_cast<std::size_t>(n);
  } else if (key == "lag_bins") {
    const auto n = integer(value, key);
    if (n <= 0) throw InvalidParameter("lag_bins must be positive");
    c.lag_bins = static_cast<std::size_t>(n);
  } else if (key == "variogram_family") {
    c.variogram_family = parse_variogram_family(unquote(value));
  } else if (key == "fallback") {
    const std::string s = unquote(value);
    if (s == "mean") c.fallback = FallbackRule::Mean;
    else if (s == "nearest") c.fallback = FallbackRule::Nearest;
    else throw InvalidParameter(fmt::format("fallback: expected mean or nearest, got '{}'", s));
  } else if (key == "snap_radius") c.snap_radius = number(value, key);
  else if (key == "max_wait") {
    const std::string s = unquote(value);
    if (s.empty() || s == "none") c.max_wait.reset();
    else c.max_wait = number(s, key);
  } else if (key == "sample_step") c.sample_step = seconds(value, key);
  else if (key == "transfer_buffer") c.transfer_buffer = seconds(value, key);
  else if (key == "service_date") c.service_date = unquote(value);
  else if (key == "workers") c.workers = static_cast<int>(integer(value, key));
  else throw InvalidParameter(fmt::format("unknown config key '{}'", key));
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::string_view source) {
  RunConfig c;
  bool explicit_periods = false;
  std::size_t line_no = 0;
  std::stringstream ss{std::string(text)};
  for (std::string raw; std::getline(ss, raw);) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(fmt::format("{}:{}: expected key = value", source, line_no));
    const auto key = trim(line.substr(0, eq));
    if (key.starts_with("period.")) explicit_periods = true;
    try {
      apply_setting(c, key, line.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw InvalidParameter(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
  if (!explicit_periods) c.periods = RunConfig::with_default_periods().periods;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), path.string());
}

void validate(const RunConfig& c) {
  auto positive = [](auto v, std::string_view name) {
    if (!(v > 0)) throw InvalidParameter(fmt::format("{} must be positive", name));
  };
  positive(c.hex_side, "hex_side");
  positive(c.tau, "tau");
  positive(c.slot_length, "slot_length");
  positive(c.walk_speed, "walk_speed");
  positive(c.max_walk, "max_walk");
  positive(c.min_headway_floor, "min_headway_floor");
  positive(c.min_obs_for_kriging, "min_obs_for_kriging");
  positive(c.lag_bins, "lag_bins");
  positive(c.snap_radius, "snap_radius");
  positive(c.sample_step, "sample_step");
  if (c.max_wait) positive(*c.max_wait, "max_wait");
  if (c.transfer_buffer < 0) throw InvalidParameter("transfer_buffer must be non-negative");
  if (c.workers < 0) throw InvalidParameter("workers must be non-negative");
  if (kDaySeconds % c.slot_length != 0)
    throw InvalidParameter("slot_length must divide 24 h");
  if (c.anchor < 0 || c.anchor > 86340) throw InvalidParameter("anchor outside the service day");
  if (c.bbox && (c.bbox->max.x <= c.bbox->min.x || c.bbox->max.y <= c.bbox->min.y))
    throw InvalidParameter("bbox is empty");
  if (!c.service_date.empty()) {
    try {
      (void)weekday_of(c.service_date);
    } catch (const FormatError& e) {
      throw InvalidParameter(e.what());
    }
  }

  auto sorted = c.periods;
  std::sort(sorted.begin(), sorted.end(),
            [](const Period& a, const Period& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& p = sorted[i];
    if (p.start < 0 || p.end > kDaySeconds || p.end <= p.start)
      throw InvalidParameter(fmt::format("period '{}' must lie within [00:00:00, 24:00:00)", p.name));
    if ((p.end - p.start) % c.sample_step != 0)
      throw InvalidParameter(fmt::format("sample_step does not divide period '{}'", p.name));
    if (i > 0 && sorted[i - 1].end > p.start)
      throw InvalidParameter(fmt::format("periods '{}' and '{}' overlap", sorted[i - 1].name, p.name));
    for (std::size_t j = 0; j < i; ++j)
      if (sorted[j].name == p.name) throw InvalidParameter(fmt::format("duplicate period '{}'", p.name));
  }
}

}  // namespace feedacc
