#include <gtest/gtest.h>

#include "feedacc/config.hpp"
#include "feedacc/error.hpp"

using namespace feedacc;

TEST(Config, DefaultsMatchReferenceSetup) {
  const RunConfig c = parse_config("", "/base");
  EXPECT_EQ(c.hex_side, 1000.0);
  EXPECT_EQ(c.tau, 3600);
  EXPECT_EQ(c.slot_length, 3600);
  EXPECT_EQ(c.max_walk, 900);
  EXPECT_DOUBLE_EQ(c.walk_speed * 3600, 5000.0);
  EXPECT_EQ(c.min_headway_floor, 60);
  EXPECT_EQ(c.anchor, 43200);
  ASSERT_EQ(c.periods.size(), 3u);
  EXPECT_EQ(c.periods[0].name, "morning");
  EXPECT_EQ(c.periods[0].start, 7 * 3600);
  EXPECT_EQ(c.periods[0].end, 10 * 3600);
  EXPECT_EQ(c.periods[2].end, 19 * 3600);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ParsesValuesAndResolvesPaths) {
  const RunConfig c = parse_config(
      "# comment\n"
      "gtfs_dir = \"feed\"   # trailing\n"
      "out_dir = /abs/out\n"
      "bbox = [1, 2, 3.5, 4]\n"
      "metric_coordinates = true\n"
      "tau = 01:30:00\n"
      "variogram_family = 'exponential'\n"
      "fallback = nearest\n"
      "max_wait = 1800\n"
      "period.am = \"06:00:00-09:00:00\"\n",
      "/base");
  EXPECT_EQ(c.gtfs_dir, std::filesystem::path("/base/feed"));
  EXPECT_EQ(c.out_dir, std::filesystem::path("/abs/out"));
  ASSERT_TRUE(c.bbox.has_value());
  EXPECT_EQ(c.bbox->max.x, 3.5);
  EXPECT_TRUE(c.metric_coordinates);
  EXPECT_EQ(c.tau, 5400);
  EXPECT_EQ(c.variogram_family, VariogramFamily::Exponential);
  EXPECT_EQ(c.fallback, FallbackRule::Nearest);
  EXPECT_EQ(*c.max_wait, 1800);
  ASSERT_EQ(c.periods.size(), 1u);
  EXPECT_EQ(c.periods[0].name, "am");
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("nonsense\n", ""), FormatError);
  EXPECT_THROW(parse_config("colour = red\n", ""), InvalidParameter);
  EXPECT_THROW(parse_config("tau = abc\n", ""), InvalidParameter);
  EXPECT_THROW(parse_config("bbox = [1, 2]\n", ""), InvalidParameter);
  EXPECT_THROW(parse_config("variogram_family = cubic\n", ""), InvalidParameter);

  auto bad = [](const std::string& text) { validate(parse_config(text, "")); };
  EXPECT_THROW(bad("hex_side = 0\n"), InvalidParameter);
  EXPECT_THROW(bad("tau = -5\n"), InvalidParameter);
  EXPECT_THROW(bad("slot_length = 7000\n"), InvalidParameter);
  EXPECT_THROW(bad("period.a = \"07:00:00-09:00:00\"\nperiod.b = \"08:00:00-10:00:00\"\n"), InvalidParameter);
  EXPECT_THROW(bad("period.a = \"20:00:00-25:00:00\"\n"), InvalidParameter);
  EXPECT_THROW(bad("service_date = 2024-06-11\n"), InvalidParameter);
  EXPECT_NO_THROW(bad("period.a = \"07:00:00-09:00:00\"\nperiod.b = \"09:00:00-10:00:00\"\n"));
}

TEST(Config, OverridesReplaceValues) {
  RunConfig c = parse_config("hex_side = 500\n", "");
  apply_setting(c, "hex_side", "750");
  apply_setting(c, "period.morning", "08:00:00-09:00:00");
  EXPECT_EQ(c.hex_side, 750);
  EXPECT_EQ(c.periods[0].start, 8 * 3600);
  EXPECT_EQ(c.periods.size(), 3u);
}
