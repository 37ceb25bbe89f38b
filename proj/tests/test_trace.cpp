#include "flashpuf/trace.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace flashpuf;

TEST_CASE("FLIP line from the early intra-page example") {
  const auto rec = parse_record("FLIP 306 0 2 17 5");
  const auto* flip = std::get_if<FlipRecord>(&rec);
  REQUIRE(flip != nullptr);
  CHECK(flip->cycle == 306);
  CHECK(flip->block == 0);
  CHECK(flip->page == 2);
  CHECK(flip->byte == 17);
  CHECK(flip->bit == 5);
  CHECK(format_record(rec) == "FLIP 306 0 2 17 5");
}

TEST_CASE("LAT and SUMMARY records") {
  const auto lat = parse_record("LAT 3 0 2 2 - 201.25");
  REQUIRE(std::holds_alternative<LatencyRecord>(lat));
  CHECK(std::get<LatencyRecord>(lat).microseconds == 201.25);
  CHECK(format_record(lat) == "LAT 3 0 2 2 - 201.25");

  const auto sum = parse_record("SUMMARY 4 2348 NEVER 8654");
  REQUIRE(std::holds_alternative<SummaryRecord>(sum));
  CHECK(std::get<SummaryRecord>(sum) == SummaryRecord{4, 2348, kNever, 8654});
  CHECK(format_record(sum) == "SUMMARY 4 2348 NEVER 8654");
}

TEST_CASE("malformed lines name their line number") {
  const char* bad[] = {
      "FLIP abc 0 2 17 5", "FLIP 1 0 2 17", "FLIP 1 0 2 17 8", "FLIP 1 0 2 17 5 9", "FLIP -1 0 2 17 5",
      "LAT 1 0 0 0 201.0", "LAT 1 0 0 0 - x", "LAT 1 0 0 0 - -3", "SUMMARY 1 NEVER", "SUMMARY 1 never 2 3",
      "SUMMARY 1 4294967295 2 3", "flip 1 0 0 0 0", "FLIP  1 0 0 0 0", "",
  };
  for (const char* line : bad) {
    CAPTURE(line);
    CHECK_THROWS_AS(parse_record(line, 9), TraceParseError);
  }

  std::istringstream in("FLIP 1 0 0 0 0\n\nFLIP abc 0 2 17 5\n");
  try {
    TraceLog::read(in);
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("write then read returns the same records") {
  std::mt19937_64 rng(11);
  TraceLog log;
  for (int i = 0; i < 2000; ++i) {
    switch (rng() % 3) {
      case 0:
        log.append(FlipRecord{rng() % 1'000'000'000'000ULL, static_cast<std::uint32_t>(rng() % 1024),
                              static_cast<std::uint32_t>(rng() % 64), static_cast<std::uint32_t>(rng() % 2112),
                              static_cast<std::uint8_t>(rng() % 8)});
        break;
      case 1: {
        std::uniform_real_distribution<double> us(0.0, 1000.0);
        log.append(LatencyRecord{rng() % 5000, 0, static_cast<std::uint32_t>(rng() % 64),
                                 static_cast<std::uint32_t>(rng() % 2112), us(rng)});
        break;
      }
      default: {
        const auto cyc = [&] { return rng() % 4 == 0 ? kNever : static_cast<std::uint32_t>(rng() % 200000); };
        log.append(SummaryRecord{static_cast<std::uint32_t>(rng() % 64), cyc(), cyc(), cyc()});
        break;
      }
    }
  }
  std::stringstream buf;
  log.write(buf);
  CHECK(TraceLog::read(buf) == log);
}

TEST_CASE("summaries keep file order") {
  TraceLog log;
  log.append(SummaryRecord{1, 376, 781, kNever});
  log.append(FlipRecord{5, 0, 1, 0, 0});
  log.append(SummaryRecord{2, 693, kNever, 1742});
  const auto rows = log.summaries();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].aggressor_page == 1);
  CHECK(rows[1].succ == 1742);
}
