#include "cbstrat/time.hpp"

#include <cstdio>

#include "cbstrat/errors.hpp"

namespace cbstrat {

namespace {

// Standard civil-calendar conversion (proleptic Gregorian).
std::int64_t days_from_civil_i64(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  unsigned v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace

DayStamp days_from_civil(int year, unsigned month, unsigned day) {
  return static_cast<DayStamp>(days_from_civil_i64(year, month, day));
}

CivilDate civil_from_days(DayStamp days) {
  std::int64_t z = days;
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

DayStamp parse_date(std::string_view text) {
  unsigned y, m, d;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !parse_uint(text, 0, 4, y) || !parse_uint(text, 5, 2, m) || !parse_uint(text, 8, 2, d) ||
      m < 1 || m > 12 || d < 1 || d > 31) {
    throw DataError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  return days_from_civil(static_cast<int>(y), m, d);
}

std::string format_date(DayStamp day) {
  const CivilDate c = civil_from_days(day);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

HourStamp parse_timestamp(std::string_view text) {
  const auto fail = [&]() -> HourStamp {
    throw DataError("invalid timestamp '" + std::string(text) +
                    "' (expected YYYY-MM-DDTHH:MM[:SS][Z], hour resolution)");
  };
  if (text.size() < 16 || text[10] != 'T') return fail();
  DayStamp day;
  try {
    day = parse_date(text.substr(0, 10));
  } catch (const DataError&) {
    return fail();
  }
  unsigned hh, mm;
  if (!parse_uint(text, 11, 2, hh) || text[13] != ':' || !parse_uint(text, 14, 2, mm) || hh > 23) {
    return fail();
  }
  std::size_t pos = 16;
  if (pos + 1 < text.size() + 1 && pos < text.size() && text[pos] == ':') {
    unsigned ss;
    if (!parse_uint(text, pos + 1, 2, ss) || ss != 0) return fail();
    pos += 3;
  }
  if (pos < text.size()) {
    if (text[pos] != 'Z' || pos + 1 != text.size()) return fail();
  }
  if (mm != 0) return fail();
  return hour_stamp(day, static_cast<int>(hh));
}

std::string format_timestamp(HourStamp ts) {
  const CivilDate c = civil_from_days(day_of(ts));
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00Z", c.year, c.month, c.day, hour_of(ts));
  return buf;
}

std::string month_key(DayStamp day) {
  const CivilDate c = civil_from_days(day);
  char buf[12];
  std::snprintf(buf, sizeof(buf), "%04d-%02u", c.year, c.month);
  return buf;
}

}  // namespace cbstrat
