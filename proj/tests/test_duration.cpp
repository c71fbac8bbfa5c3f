#include <doctest.h>

#include "fleetreg/duration.hpp"
#include "fleetreg/error.hpp"

using namespace fleetreg;

TEST_CASE("decisecond formatting") {
  CHECK(Deciseconds(590).to_string() == "59");
  CHECK(Deciseconds(655).to_string() == "65.5");
  CHECK(Deciseconds(655).to_string_fixed() == "65.5");
  CHECK(Deciseconds(590).to_string_fixed() == "59.0");
  CHECK(Deciseconds(0).to_string_fixed() == "0.0");
}

TEST_CASE("duration parsing round-trips the table granularity") {
  CHECK(parse_duration("59") == Deciseconds(590));
  CHECK(parse_duration("65.5") == Deciseconds(655));
  CHECK(parse_duration("3169.6") == Deciseconds(31696));
  CHECK(parse_duration("0") == Deciseconds(0));
  CHECK_THROWS_AS(parse_duration("1.2s"), Error);
  CHECK_THROWS_AS(parse_duration(""), Error);

  for (std::int64_t t : {0L, 1L, 9L, 10L, 31696L, 189620L}) {
    CHECK(parse_duration(Deciseconds(t).to_string()) == Deciseconds(t));
    CHECK(parse_duration(Deciseconds(t).to_string_fixed()) == Deciseconds(t));
  }
}

TEST_CASE("arithmetic stays in ticks") {
  CHECK(Deciseconds(10) + Deciseconds(5) == Deciseconds(15));
  CHECK(Deciseconds(10) - Deciseconds(5) == Deciseconds(5));
  CHECK(Deciseconds(10) * 3 == Deciseconds(30));
  CHECK(Deciseconds::from_seconds(65.55) == Deciseconds(656));  // rounds
}
