#include "flashpuf/config.hpp"
#include "flashpuf/io.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace flashpuf;

namespace {

Signature random_signature(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Signature s;
  s.block = static_cast<std::uint32_t>(rng() % 1024);
  s.page = static_cast<std::uint32_t>(rng() % 64);
  s.total_cycles = 100000;
  s.pattern = 0x5A;
  s.technique = Technique::ReadDisturb;
  for (auto& b : s.bits) b = rng() % 2 ? kNever : static_cast<std::uint32_t>(rng() % 100000);
  return s;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("signature file layout") {
  Signature s;
  s.block = 1;
  s.page = 2;
  s.total_cycles = 3;
  s.pattern = 0xAA;
  s.technique = Technique::AdjacentPage;
  s.bits[0] = 0x01020304;
  std::ostringstream out;
  write_signature(out, s);
  const std::string b = out.str();
  REQUIRE(b.size() == 5 + 1 + 4 + 4 + 4 + 1 + 4 * kPageBits);
  CHECK(b.substr(0, 5) == "FSIG1");
  CHECK(static_cast<unsigned char>(b[5]) == 1);
  CHECK(b.substr(6, 4) == std::string("\x01\0\0\0", 4));
  CHECK(b.substr(10, 4) == std::string("\x02\0\0\0", 4));
  CHECK(b.substr(14, 4) == std::string("\x03\0\0\0", 4));
  CHECK(static_cast<unsigned char>(b[18]) == 0xAA);
  CHECK(b.substr(19, 4) == std::string("\x04\x03\x02\x01", 4));
  CHECK(b.substr(23, 4) == std::string("\xFF\xFF\xFF\xFF", 4));
}

TEST_CASE("signature round trip and rejection of damaged files") {
  const auto s = random_signature(3);
  std::stringstream buf;
  write_signature(buf, s);
  CHECK(read_signature(buf) == s);

  std::string bytes;
  {
    std::ostringstream o;
    write_signature(o, s);
    bytes = o.str();
  }
  std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_signature(truncated), FormatError);
  std::istringstream trailing(bytes + "x");
  CHECK_THROWS_AS(read_signature(trailing), FormatError);
  std::string wrong = bytes;
  wrong[0] = 'X';
  std::istringstream bad_magic(wrong);
  CHECK_THROWS_AS(read_signature(bad_magic), FormatError);
  wrong = bytes;
  wrong[5] = 9;
  std::istringstream bad_technique(wrong);
  CHECK_THROWS_AS(read_signature(bad_technique), FormatError);
}

TEST_CASE("stable map round trip") {
  const auto s = random_signature(5);
  const auto m = StableBitMap::from_signature(s);
  std::stringstream buf;
  write_stable_map(buf, m);
  CHECK(buf.str().size() == 5 + 12 + kPageBytes);
  CHECK(read_stable_map(buf) == m);
  CHECK(m.stable.count() == s.never_count());
}

TEST_CASE("heatmap csv has one row per byte and eight class columns") {
  const auto s = random_signature(8);
  const auto edges = default_bucket_edges(s.total_cycles);
  std::ostringstream out;
  write_heatmap_csv(out, heatmap(s, edges));
  std::istringstream in(out.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    REQUIRE(count(line, ",") == 8);
    REQUIRE(line.substr(0, line.find(',')) == std::to_string(rows));
    ++rows;
  }
  CHECK(rows == 2112);
}

TEST_CASE("all-stable signature renders in a single colour") {
  Signature s;
  s.total_cycles = 1000;
  std::ostringstream out;
  write_heatmap_svg(out, heatmap(s, default_bucket_edges(s.total_cycles)));
  const std::string svg = out.str();
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count(svg, "<rect") == kPageBits);
  CHECK(count(svg, "fill=\"#ffffff\"") == kPageBits);
}

TEST_CASE("heatmap colours run dark to warm") {
  CHECK(heatmap_color(0, 9) == "#ffffff");
  CHECK(heatmap_color(1, 9) == "#000004");
  CHECK(heatmap_color(9, 9) == "#fcffa4");
  std::set<std::string> distinct;
  for (std::uint8_t c = 1; c <= 9; ++c) distinct.insert(heatmap_color(c, 9));
  CHECK(distinct.size() == 9);
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config_text(R"(# same-page run
technique = adjacent_page
block = 3
target_page = 5   # aggressor
pattern = 0x55
iterations = 250
check_interval = 10
pre_program_all = true
chip_seed = 18446744073709551615
sigma = 0
read_disturb = false
)");
  CHECK(cfg.technique == Technique::AdjacentPage);
  CHECK(cfg.block == 3);
  CHECK(cfg.target_page == 5);
  CHECK(cfg.pattern == 0x55);
  CHECK(cfg.iterations == 250);
  CHECK(cfg.check_interval == 10u);
  CHECK(cfg.pre_program_all);
  CHECK(cfg.chip_seed == 18446744073709551615ULL);
  CHECK(cfg.params.sigma == 0.0);
  CHECK_FALSE(cfg.params.read_disturb);
  CHECK(parse_config_text("pattern = 170").pattern == 0xAA);
}

TEST_CASE("empty config gives the documented defaults") {
  const auto cfg = parse_config_text("");
  CHECK(cfg == ExperimentConfig{});
  CHECK(cfg.pattern == 0xAA);
  CHECK(cfg.iterations == 10000);
  CHECK(cfg.block == 0);
}

TEST_CASE("config errors name the line") {
  const char* bad[] = {"nonsense", "colour = red", "block = -1", "pattern = 0x100", "iterations = 1e3",
                       "technique = magic", "pre_program_all = maybe", "block = 1\nblock = 2", "= 4", "sigma = abc"};
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config_text(text), ConfigError);
  }
  try {
    parse_config_text("block = 1\n\nbogus = 2\n");
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("written configs and manifests parse back to the same config") {
  ExperimentConfig cfg;
  cfg.technique = Technique::MultiPageSweep;
  cfg.report_page = 1;
  cfg.check_interval = 7;
  cfg.params.intra_scale = 0.1 + 0.2;
  cfg.params.pair_rate = std::log(2.0);
  cfg.params.program_disturb = false;
  std::ostringstream out;
  write_config(out, cfg);
  CHECK(parse_config_text(out.str()) == cfg);

  std::ostringstream manifest;
  write_manifest(manifest, cfg);
  CHECK(manifest.str().find("tool_version = ") != std::string::npos);
  CHECK(manifest.str().find("output.signature = signature.bin") != std::string::npos);
  CHECK(parse_config_text(manifest.str()) == cfg);
}
