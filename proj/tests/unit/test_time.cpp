#include <doctest.h>

#include "cbstrat/errors.hpp"
#include "cbstrat/time.hpp"

using namespace cbstrat;

TEST_CASE("civil date conversions round-trip") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(2019, 1, 1) == 17897);
  for (DayStamp d : {0, 59, 17897, 18000, 20000}) {
    const CivilDate c = civil_from_days(d);
    CHECK(days_from_civil(c.year, c.month, c.day) == d);
  }
}

TEST_CASE("date parse and format") {
  CHECK(parse_date("2019-06-01") == days_from_civil(2019, 6, 1));
  CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
  CHECK_THROWS_AS(parse_date("2019/06/01"), DataError);
  CHECK_THROWS_AS(parse_date("2019-13-01"), DataError);
  CHECK_THROWS_AS(parse_date("junk"), DataError);
}

TEST_CASE("timestamp parse accepts hour-resolution variants") {
  const HourStamp ts = parse_timestamp("2019-06-01T14:00Z");
  CHECK(hour_of(ts) == 14);
  CHECK(day_of(ts) == parse_date("2019-06-01"));
  CHECK(parse_timestamp("2019-06-01T14:00") == ts);
  CHECK(parse_timestamp("2019-06-01T14:00:00Z") == ts);
  CHECK(format_timestamp(ts) == "2019-06-01T14:00Z");

  CHECK_THROWS_AS(parse_timestamp("2019-06-01T14:30Z"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2019-06-01T14:00:30Z"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2019-06-01 14:00"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2019-06-01T25:00Z"), DataError);
}

TEST_CASE("hour arithmetic") {
  const HourStamp ts = hour_stamp(17897, 23);
  CHECK(day_of(ts) == 17897);
  CHECK(hour_of(ts) == 23);
  CHECK(day_of(ts + 1) == 17898);
  CHECK(hour_of(ts + 1) == 0);
  CHECK(month_key(parse_date("2019-06-15")) == "2019-06");
}

TEST_CASE("date range") {
  const DateRange r{10, 12};
  CHECK(r.contains(10));
  CHECK(r.contains(12));
  CHECK_FALSE(r.contains(13));
  CHECK(r.days() == 3);
}
