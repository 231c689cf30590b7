#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "feedacc/config.hpp"
#include "feedacc/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace feedacc;

  CLI::App app{"Shared-mobility feeder accessibility pipeline"};
  std::string command = "run";
  std::string config_path;
  std::string stage_name;
  std::string feed_name = "base";
  std::string out_dir;
  std::string timings_path;
  int workers = -1;
  std::vector<std::string> settings;

  app.add_option("command", command,
                 "run | tessellate | ingest | estimate | synthesize | score | diff")
      ->check(CLI::IsMember({"run", "tessellate", "ingest", "estimate", "synthesize", "score", "diff"}));
  app.add_option("-c,--config", config_path, "Config file (key = value)")->required();
  app.add_option("-s,--stage", stage_name, "Stage to run (same as the command)");
  app.add_option("--feed", feed_name, "Feed scored by the score stage: base | augmented")
      ->check(CLI::IsMember({"base", "augmented"}));
  app.add_option("-o,--out", out_dir, "Output directory (overrides out_dir)");
  app.add_option("-j,--workers", workers, "Worker threads for kriging and scoring (0 = all)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--set", settings, "Override a config key: key=value");
  app.add_option("--timings", timings_path, "Write per-stage wall-clock seconds to this JSON file");
  CLI11_PARSE(app, argc, argv);

  if (!stage_name.empty()) command = stage_name;

  RunConfig config;
  try {
    config = load_config(config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InvalidParameter(fmt::format("--set expects key=value, got '{}'", s));
      apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (workers >= 0) config.workers = workers;
    validate(config);
  } catch (const std::exception& e) {
    fmt::print(stderr, "[config] {}\n", e.what());
    return 2;
  }

  Pipeline pipeline(config);
  nlohmann::json timings = nlohmann::json::object();
  pipeline.set_timer([&](Stage stage, Feed feed, double seconds) {
    std::string label(to_string(stage));
    if (stage == Stage::Score) label += fmt::format("_{}", to_string(feed));
    fmt::print(stderr, "{}: {:.3f} s\n", label, seconds);
    timings[label] = timings.value(label, 0.0) + seconds;
  });

  try {
    if (command == "run") {
      pipeline.run_all();
    } else {
      pipeline.run(parse_stage(command), parse_feed(feed_name));
    }
  } catch (const StageError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "[{}] {}\n", command, e.what());
    return 1;
  }

  if (!timings_path.empty()) {
    std::ofstream out(timings_path);
    out << timings.dump(2) << '\n';
  }
  return 0;
}
