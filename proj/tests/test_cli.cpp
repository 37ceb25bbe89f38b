#include "flashpuf/commands.hpp"
#include "flashpuf/io.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace flashpuf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flashpuf-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(FLASHPUF_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run(const fs::path& config, const fs::path& out) {
  std::ostringstream o, e;
  return cmd_run(config, out, {}, o, e);
}

}  // namespace

TEST_CASE("run writes the fixed output layout and repeats byte for byte") {
  const auto dir = scratch("repeat");
  const auto cfg = write_file(dir / "run.conf", "technique = same_page\niterations = 3000\n");
  REQUIRE(run(cfg, dir / "a") == 0);
  REQUIRE(run(cfg, dir / "b") == 0);
  for (const char* name : {"manifest.txt", "trace.log", "signature.bin", "stable.bin", "heatmap.svg"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }

  std::ostringstream out, err;
  CHECK(cmd_replay(dir / "a", out, err) == 0);
  CHECK(out.str().find("replay=identical") != std::string::npos);

  // Corrupt one output: replay reports the mismatch.
  write_file(dir / "a" / "trace.log", "FLIP 1 0 2 0 1\n");
  std::ostringstream out2;
  CHECK(cmd_replay(dir / "a", out2, err) == exit_code::kMismatch);
  CHECK(out2.str().find("trace.log=differs") != std::string::npos);
}

TEST_CASE("seed flags override the config") {
  const auto dir = scratch("seeds");
  const auto cfg = write_file(dir / "run.conf", "iterations = 1500\n");
  RunOptions opt;
  opt.chip_seed = 99;
  opt.quiet = true;
  std::ostringstream out, err;
  REQUIRE(cmd_run(cfg, dir / "r", opt, out, err) == 0);
  CHECK(out.str().empty());
  CHECK(load_config(dir / "r" / "manifest.txt").chip_seed == 99);
}

TEST_CASE("zero iterations: empty trace and all-stable map") {
  const auto dir = scratch("zero");
  const auto cfg = write_file(dir / "run.conf", "iterations = 0\n");
  REQUIRE(run(cfg, dir / "r") == 0);
  CHECK(slurp(dir / "r" / "trace.log").empty());
  CHECK(load_stable_map(dir / "r" / "stable.bin").stable.all());
}

TEST_CASE("every technique runs through cmd_run") {
  const auto dir = scratch("techniques");
  const char* configs[] = {
      "technique = adjacent_page\ntarget_page = 2\niterations = 2500\n",
      "technique = multi_page_sweep\niterations = 500\nfirst_page = 0\nlast_page = 3\n",
      "technique = read_disturb\ntarget_page = 0\niterations = 5000\nread_disturb_median = 2000\n",
      "technique = program_latency\ntarget_page = 9\n",
  };
  int i = 0;
  for (const char* text : configs) {
    CAPTURE(text);
    const auto out = dir / std::to_string(i++);
    REQUIRE(run(write_file(dir / "c.conf", text), out) == 0);
    const auto sig = load_signature(out / "signature.bin");
    CHECK(sig.bits.size() == kPageBits);
  }
  const auto lat = load_signature(dir / "3" / "signature.bin");
  CHECK(lat.technique == Technique::ProgramLatency);
  CHECK(lat.bits[0] == lat.bits[7]);
  CHECK(lat.bits[0] > 150000);  // nanoseconds around the 200 us base
  CHECK(lat.bits[0] < 250000);
}

TEST_CASE("config and technique errors exit 2") {
  const auto dir = scratch("errors");
  CHECK(run(write_file(dir / "bad.conf", "colour = red\n"), dir / "r") == exit_code::kUsage);
  CHECK(run(dir / "missing.conf", dir / "r") == exit_code::kUsage);
  CHECK(run(write_file(dir / "edge.conf", "technique = adjacent_page\ntarget_page = 0\n"), dir / "r") ==
        exit_code::kUsage);
  CHECK(run(write_file(dir / "report.conf", "technique = adjacent_page\ntarget_page = 5\nreport_page = 9\n"),
            dir / "r") == exit_code::kUsage);
}

TEST_CASE("compare reports identity, distinct chips and shape mismatch") {
  const auto dir = scratch("compare");
  // Aggressor 2 hammers page 3, whose cells all start erased.
  const auto cfg =
      write_file(dir / "adj.conf", "technique = adjacent_page\ntarget_page = 2\nreport_page = 3\niterations = 20000\n");
  RunOptions one;
  one.chip_seed = 1;
  RunOptions two;
  two.chip_seed = 2;
  std::ostringstream o, e;
  REQUIRE(cmd_run(cfg, dir / "s1", one, o, e) == 0);
  REQUIRE(cmd_run(cfg, dir / "s1b", one, o, e) == 0);
  REQUIRE(cmd_run(cfg, dir / "s2", two, o, e) == 0);

  std::ostringstream same;
  REQUIRE(cmd_compare(dir / "s1" / "signature.bin", dir / "s1" / "signature.bin", same, e) == 0);
  auto kv = key_values(same.str());
  CHECK(kv["pearson"] == "1.000000");
  CHECK(kv["hamming"] == "0.000000");
  CHECK(kv["verdict"] == "match");

  std::ostringstream baseline;
  cmd_compare(dir / "s1" / "signature.bin", dir / "s1b" / "signature.bin", baseline, e);
  const double base = std::stod(key_values(baseline.str())["hamming"]);
  CHECK(base == 0.0);

  std::ostringstream diff;
  REQUIRE(cmd_compare(dir / "s1" / "signature.bin", dir / "s2" / "signature.bin", diff, e) == 0);
  kv = key_values(diff.str());
  CHECK(std::stod(kv["hamming"]) > base);
  CHECK(kv["verdict"] == "distinct");
  CHECK(std::abs(std::stod(kv["pearson"])) < 0.2);

  REQUIRE(run(write_file(dir / "same.conf", "iterations = 100\n"), dir / "sp") == 0);
  CHECK(cmd_compare(dir / "s1" / "signature.bin", dir / "sp" / "signature.bin", o, e) == exit_code::kUsage);
  CHECK(cmd_compare(dir / "nope.bin", dir / "s1" / "signature.bin", o, e) == exit_code::kUsage);
}

TEST_CASE("fit recovers an exactly exponential chip") {
  const auto dir = scratch("fit");
  const auto cfg = write_file(dir / "sweep.conf",
                              "technique = multi_page_sweep\niterations = 12000\nfirst_page = 1\nlast_page = 5\n"
                              "sigma = 0\nintra_scale = 100\nintra_rate = 0.69314718055994530942\n"
                              "pair_scale = 300\npair_rate = 0.69314718055994530942\n");
  REQUIRE(run(cfg, dir / "r") == 0);
  std::ostringstream out, err;
  REQUIRE(cmd_fit(dir / "r" / "trace.log", out, err) == 0);
  auto kv = key_values(out.str());
  CHECK(std::stod(kv["intra_scale"]) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(std::stod(kv["intra_rate"]) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(std::stod(kv["pair_scale"]) == doctest::Approx(300.0).epsilon(1e-6));
  CHECK(std::stod(kv["pair_rate"]) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(out.str().find("\n63 ") != std::string::npos);

  write_file(dir / "one.log", "SUMMARY 1 376 781 NEVER\n");
  CHECK(cmd_fit(dir / "one.log", out, err) == exit_code::kUsage);
  write_file(dir / "junk.log", "SUMMARY x\n");
  CHECK(cmd_fit(dir / "junk.log", out, err) == exit_code::kUsage);
}

TEST_CASE("fit on a default chip grows exponentially") {
  const auto dir = scratch("fit-default");
  const auto cfg = write_file(dir / "sweep.conf",
                              "technique = multi_page_sweep\niterations = 20000\nfirst_page = 1\nlast_page = 6\n");
  REQUIRE(run(cfg, dir / "r") == 0);
  std::ostringstream out, err;
  REQUIRE(cmd_fit(dir / "r" / "trace.log", out, err) == 0);
  CHECK(std::stod(key_values(out.str())["intra_rate"]) > 0.0);
}

TEST_CASE("plot writes csv and svg") {
  const auto dir = scratch("plot");
  Signature blank;
  blank.total_cycles = 500;
  save_signature(dir / "blank.bin", blank);
  const std::vector<fs::path> outs = {dir / "h.csv", dir / "h.svg"};
  std::ostringstream out, err;
  REQUIRE(cmd_plot(dir / "blank.bin", outs, out, err) == 0);

  std::ifstream csv(dir / "h.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    REQUIRE(std::count(line.begin(), line.end(), ',') == 8);
    ++rows;
  }
  CHECK(rows == 2112);
  const std::string svg = slurp(dir / "h.svg");
  CHECK(svg.find("fill=\"#") != std::string::npos);
  std::size_t white = 0;
  for (auto p = svg.find("#ffffff"); p != std::string::npos; p = svg.find("#ffffff", p + 1)) ++white;
  CHECK(white == kPageBits);

  const std::vector<fs::path> unwritable = {dir / "no-such-dir" / "h.svg"};
  CHECK(cmd_plot(dir / "blank.bin", unwritable, out, err) == exit_code::kUsage);
  const std::vector<fs::path> png = {dir / "h.png"};
  CHECK(cmd_plot(dir / "blank.bin", png, out, err) == exit_code::kUsage);
}

TEST_CASE("page 1 heatmap after a 100k sweep holds fully flipped byte rows") {
  const auto dir = scratch("page1");
  const auto cfg = write_file(dir / "sweep.conf",
                              "technique = multi_page_sweep\niterations = 100000\nfirst_page = 0\nlast_page = 2\n"
                              "report_page = 1\n");
  REQUIRE(run(cfg, dir / "r") == 0);
  const auto sig = load_signature(dir / "r" / "signature.bin");
  CHECK(sig.page == 1);
  const auto grid = heatmap(sig, default_bucket_edges(sig.total_cycles));
  CHECK(grid.fully_flipped_rows() > 0);
}

TEST_CASE("command-line front end") {
  const auto dir = scratch("binary");
  const auto cfg = write_file(dir / "run.conf", "iterations = 200\n");
  CHECK(cli("run --config " + cfg.string() + " --out " + (dir / "r").string() + " --seed 4 --quiet") == 0);
  CHECK(cli("compare " + (dir / "r" / "signature.bin").string() + " " + (dir / "r" / "signature.bin").string()) == 0);
  CHECK(cli("plot " + (dir / "r" / "signature.bin").string() + " " + (dir / "h.csv").string()) == 0);
  CHECK(cli("replay --out " + (dir / "r").string()) == 0);
  CHECK(cli("run --config " + (dir / "missing.conf").string() + " --out " + (dir / "x").string()) == 2);
  CHECK(cli("run --out " + (dir / "x").string()) == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("") == 2);
  CHECK(cli("--help") == 0);
}
