#include "cdrgeo/time.hpp"

#include <chrono>
#include <cstdio>

namespace cdrgeo {
namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  return true;
}

std::optional<std::int64_t> civil_day(int y, int m, int d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

std::optional<Timestamp> parse_iso8601_utc(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':' || s[19] != 'Z')
    return std::nullopt;
  int y, mo, d, h, mi, se;
  if (!digits(s, 0, 4, y) || !digits(s, 5, 2, mo) || !digits(s, 8, 2, d) ||
      !digits(s, 11, 2, h) || !digits(s, 14, 2, mi) || !digits(s, 17, 2, se))
    return std::nullopt;
  if (h > 23 || mi > 59 || se > 59) return std::nullopt;
  const auto day = civil_day(y, mo, d);
  if (!day) return std::nullopt;
  return *day * kSecondsPerDay + h * 3600 + mi * 60 + se;
}

std::optional<Timestamp> parse_date_or_timestamp(std::string_view s) {
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    int y, mo, d;
    if (!digits(s, 0, 4, y) || !digits(s, 5, 2, mo) || !digits(s, 8, 2, d))
      return std::nullopt;
    const auto day = civil_day(y, mo, d);
    if (!day) return std::nullopt;
    return *day * kSecondsPerDay;
  }
  return parse_iso8601_utc(s);
}

std::string format_iso8601_utc(Timestamp t) {
  using namespace std::chrono;
  const std::int64_t day = local_day(t, 0);
  const std::int64_t secs = t - day * kSecondsPerDay;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(secs / 3600),
                int(secs / 60 % 60), int(secs % 60));
  return buf;
}

std::optional<int> parse_utc_offset(std::string_view s) {
  if (s == "Z") return 0;
  if (s.size() != 6 || (s[0] != '+' && s[0] != '-') || s[3] != ':') return std::nullopt;
  int h, m;
  if (!digits(s, 1, 2, h) || !digits(s, 4, 2, m) || h > 14 || m > 59) return std::nullopt;
  const int secs = h * 3600 + m * 60;
  return s[0] == '-' ? -secs : secs;
}

std::string format_utc_offset(int seconds) {
  const char sign = seconds < 0 ? '-' : '+';
  const int a = seconds < 0 ? -seconds : seconds;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, a / 3600, a / 60 % 60);
  return buf;
}

}  // namespace cdrgeo
