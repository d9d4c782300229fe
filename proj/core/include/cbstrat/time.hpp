#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cbstrat {

// All market timestamps are hour-resolution UTC labels. HourStamp counts
// hours since 1970-01-01T00:00Z, DayStamp counts days since 1970-01-01.
using HourStamp = std::int64_t;
using DayStamp = std::int32_t;

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

DayStamp days_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_days(DayStamp days);

constexpr DayStamp day_of(HourStamp ts) {
  return static_cast<DayStamp>(ts >= 0 ? ts / 24 : (ts - 23) / 24);
}
constexpr int hour_of(HourStamp ts) {
  const auto h = ts % 24;
  return static_cast<int>(h >= 0 ? h : h + 24);
}
constexpr HourStamp hour_stamp(DayStamp day, int hour) {
  return static_cast<HourStamp>(day) * 24 + hour;
}

// "YYYY-MM-DD"
DayStamp parse_date(std::string_view text);
std::string format_date(DayStamp day);

// "YYYY-MM-DDTHH:MM[:SS][Z]" with zero minutes/seconds; emitted canonically
// as "YYYY-MM-DDTHH:00Z".
HourStamp parse_timestamp(std::string_view text);
std::string format_timestamp(HourStamp ts);

// "YYYY-MM"
std::string month_key(DayStamp day);

// Inclusive calendar-day range.
struct DateRange {
  DayStamp first = 0;
  DayStamp last = 0;
  constexpr bool contains(DayStamp d) const { return d >= first && d <= last; }
  constexpr int days() const { return last - first + 1; }
};

}  // namespace cbstrat
