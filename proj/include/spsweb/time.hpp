/*
Copyright 2026 The spsweb Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef SPSWEB_TIME_HPP
#define SPSWEB_TIME_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

namespace spsweb {

/// Milliseconds since 1970-01-01T00:00:00Z. All service-side timestamps
/// (virtual clock, history, notifications) use this resolution.
using Instant = std::int64_t;
using DurationMs = std::int64_t;

inline constexpr DurationMs kMillisPerSecond = 1000;

namespace timeutil {

// Proleptic Gregorian <-> days since epoch (Howard Hinnant's algorithms).
constexpr std::int64_t days_from_civil(int y, int m, int d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  int year;
  int month;
  int day;
};

constexpr CivilDate civil_from_days(std::int64_t z) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m),
          static_cast<int>(d)};
}

constexpr bool is_leap(int y) noexcept {
  return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
}

constexpr int days_in_month(int y, int m) noexcept {
  constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

inline std::int64_t civil_to_epoch_seconds(int y, int mo, int d, int h, int mi,
                                           int s) noexcept {
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
};

inline CivilTime civil_from_epoch_seconds(std::int64_t t) noexcept {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const CivilDate cd = civil_from_days(days);
  CivilTime ct;
  ct.year = cd.year;
  ct.month = cd.month;
  ct.day = cd.day;
  ct.hour = static_cast<int>(rem / 3600);
  ct.minute = static_cast<int>((rem % 3600) / 60);
  ct.second = static_cast<int>(rem % 60);
  return ct;
}

inline bool parse_fixed_digits(std::string_view s, std::size_t pos, int count,
                               int& out) noexcept {
  if (pos + static_cast<std::size_t>(count) > s.size()) return false;
  int v = 0;
  for (int i = 0; i < count; ++i) {
    const char c = s[pos + static_cast<std::size_t>(i)];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace timeutil

/// Parses an ISO-8601 date-time with either "Z" or a numeric offset into a
/// UTC instant. Fractional seconds beyond milliseconds are truncated. Used
/// for configuration and internal documents; the tasking-parameter codec has
/// its own stricter lexer.
inline std::optional<Instant> parse_instant(std::string_view s) noexcept {
  using namespace timeutil;
  int y, mo, d, h, mi, sec;
  if (s.size() < 20) return std::nullopt;
  if (!parse_fixed_digits(s, 0, 4, y) || s[4] != '-' ||
      !parse_fixed_digits(s, 5, 2, mo) || s[7] != '-' ||
      !parse_fixed_digits(s, 8, 2, d) || s[10] != 'T' ||
      !parse_fixed_digits(s, 11, 2, h) || s[13] != ':' ||
      !parse_fixed_digits(s, 14, 2, mi) || s[16] != ':' ||
      !parse_fixed_digits(s, 17, 2, sec)) {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 ||
      mi > 59 || sec > 60) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  std::int64_t millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    while (digits < 3) {
      millis *= 10;
      ++digits;
    }
  }
  if (pos >= s.size()) return std::nullopt;
  int offset_minutes = 0;
  if (s[pos] == 'Z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '-' ? -1 : 1;
    int oh, om;
    if (!parse_fixed_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() ||
        s[pos + 3] != ':' || !parse_fixed_digits(s, pos + 4, 2, om)) {
      return std::nullopt;
    }
    if (oh > 18 || om > 59) return std::nullopt;
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const std::int64_t utc =
      civil_to_epoch_seconds(y, mo, d, h, mi, sec) - offset_minutes * 60;
  return utc * kMillisPerSecond + millis;
}

/// Formats a UTC instant as ISO-8601 with "Z"; milliseconds only when
/// nonzero, so whole-second stamps stay compact.
inline std::string format_instant(Instant t) {
  std::int64_t seconds = t / kMillisPerSecond;
  std::int64_t ms = t % kMillisPerSecond;
  if (ms < 0) {
    ms += kMillisPerSecond;
    --seconds;
  }
  const timeutil::CivilTime ct = timeutil::civil_from_epoch_seconds(seconds);
  char buf[40];
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  ct.year, ct.month, ct.day, ct.hour, ct.minute, ct.second,
                  static_cast<int>(ms));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", ct.year,
                  ct.month, ct.day, ct.hour, ct.minute, ct.second);
  }
  return buf;
}

}  // namespace spsweb

#endif  // SPSWEB_TIME_HPP
