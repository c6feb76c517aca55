#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cdrgeo {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Parses `YYYY-MM-DDTHH:MM:SSZ`. Anything else (including out-of-range
/// fields such as month 13 or Feb 30) yields nullopt.
std::optional<Timestamp> parse_iso8601_utc(std::string_view text);

/// Accepts either a full timestamp or a bare `YYYY-MM-DD` (midnight UTC).
std::optional<Timestamp> parse_date_or_timestamp(std::string_view text);

std::string format_iso8601_utc(Timestamp t);

/// `+HH:MM` / `-HH:MM` / `Z` to signed seconds.
std::optional<int> parse_utc_offset(std::string_view text);
std::string format_utc_offset(int seconds);

/// Local calendar day number (days since epoch) after applying a fixed offset.
inline std::int64_t local_day(Timestamp t, int offset_seconds) {
  const std::int64_t local = t + offset_seconds;
  return local >= 0 ? local / kSecondsPerDay
                    : -((-local + kSecondsPerDay - 1) / kSecondsPerDay);
}

inline int local_hour(Timestamp t, int offset_seconds) {
  const std::int64_t local = t + offset_seconds;
  const std::int64_t in_day = local - local_day(t, offset_seconds) * kSecondsPerDay;
  return static_cast<int>(in_day / 3600);
}

}  // namespace cdrgeo
