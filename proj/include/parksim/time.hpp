#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace parksim {

// Naive civil time (no zone) at one-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr int kHoursPerWeek = 168;

/// Parses `YYYY-MM-DDTHH:MM:SS` (a space separator and a trailing `Z` are accepted).
/// Throws DataError on malformed input.
Timestamp parse_timestamp(std::string_view text);

/// Empty or whitespace-only input yields nullopt; anything else must parse.
std::optional<Timestamp> parse_optional_timestamp(std::string_view text);

/// Parses `YYYY-MM-DD` into midnight of that day.
Timestamp parse_date(std::string_view text);

std::string format_timestamp(Timestamp t);
std::string format_date(Timestamp t);

int hour_of_day(Timestamp t);

/// 0 = Monday ... 6 = Sunday.
int day_of_week(Timestamp t);

Timestamp floor_to_hour(Timestamp t);
Timestamp floor_to_day(Timestamp t);

}  // namespace parksim
