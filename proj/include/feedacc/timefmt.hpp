#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace feedacc {

/// Whole seconds since midnight of the service day (may exceed 86400 for
/// GTFS over-midnight times).
using Seconds = std::int32_t;

inline constexpr Seconds kDaySeconds = 86400;
inline constexpr Seconds kUnreachable = std::numeric_limits<Seconds>::max();

/// Parses `H:MM:SS` / `HH:MM:SS`; hours may be >= 24. Throws FormatError.
Seconds parse_hms(std::string_view text);

/// Formats as zero-padded `HH:MM:SS`; hours may exceed 23.
std::string format_hms(Seconds t);

}  // namespace feedacc
