#include "feedacc/timefmt.hpp"

#include <charconv>

#include <fmt/format.h>

#include "feedacc/error.hpp"

namespace feedacc {
namespace {

int parse_component(std::string_view part, std::string_view whole) {
  int value = 0;
  const auto* end = part.data() + part.size();
  auto [ptr, ec] = std::from_chars(part.data(), end, value);
  if (part.empty() || ec != std::errc{} || ptr != end || value < 0)
    throw FormatError(fmt::format("invalid time '{}'", whole));
  return value;
}

}  // namespace

Seconds parse_hms(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);

  const auto c1 = s.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : s.find(':', c1 + 1);
  if (c1 == std::string_view::npos || c2 == std::string_view::npos)
    throw FormatError(fmt::format("invalid time '{}'", text));

  const int h = parse_component(s.substr(0, c1), text);
  const int m = parse_component(s.substr(c1 + 1, c2 - c1 - 1), text);
  const int sec = parse_component(s.substr(c2 + 1), text);
  if (m > 59 || sec > 59 || h > 99)
    throw FormatError(fmt::format("invalid time '{}'", text));
  return static_cast<Seconds>(h * 3600 + m * 60 + sec);
}

std::string format_hms(Seconds t) {
  return fmt::format("{:02d}:{:02d}:{:02d}", t / 3600, (t / 60) % 60, t % 60);
}

}  // namespace feedacc
