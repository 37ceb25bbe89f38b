#include "flashpuf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace flashpuf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_unsigned(std::string_view v, std::string_view key) {
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid value for " + std::string(key) + ": " + std::string(v));
  }
  return out;
}

double parse_double(std::string_view v, std::string_view key) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid value for " + std::string(key) + ": " + std::string(v));
  }
  return out;
}

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": " + std::string(v));
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"technique",
       [](ExperimentConfig& c, std::string_view v, std::string_view) {
         const auto t = parse_technique(v);
         if (!t) throw ConfigError("unknown technique: " + std::string(v));
         c.technique = *t;
       }},
      {"block", [](auto& c, auto v, auto k) { c.block = parse_unsigned<std::uint32_t>(v, k); }},
      {"target_page", [](auto& c, auto v, auto k) { c.target_page = parse_unsigned<std::uint32_t>(v, k); }},
      {"report_page", [](auto& c, auto v, auto k) { c.report_page = parse_unsigned<std::uint32_t>(v, k); }},
      {"pattern", [](auto& c, auto v, auto k) { c.pattern = parse_unsigned<std::uint8_t>(v, k); }},
      {"iterations", [](auto& c, auto v, auto k) { c.iterations = parse_unsigned<std::uint32_t>(v, k); }},
      {"check_interval", [](auto& c, auto v, auto k) { c.check_interval = parse_unsigned<std::uint32_t>(v, k); }},
      {"pre_program_all", [](auto& c, auto v, auto k) { c.pre_program_all = parse_bool(v, k); }},
      {"first_page", [](auto& c, auto v, auto k) { c.first_page = parse_unsigned<std::uint32_t>(v, k); }},
      {"last_page", [](auto& c, auto v, auto k) { c.last_page = parse_unsigned<std::uint32_t>(v, k); }},
      {"chip_seed", [](auto& c, auto v, auto k) { c.chip_seed = parse_unsigned<std::uint64_t>(v, k); }},
      {"experiment_seed", [](auto& c, auto v, auto k) { c.experiment_seed = parse_unsigned<std::uint64_t>(v, k); }},
      {"blocks_per_chip", [](auto& c, auto v, auto k) { c.blocks_per_chip = parse_unsigned<std::uint32_t>(v, k); }},
      {"intra_scale", [](auto& c, auto v, auto k) { c.params.intra_scale = parse_double(v, k); }},
      {"intra_rate", [](auto& c, auto v, auto k) { c.params.intra_rate = parse_double(v, k); }},
      {"pair_scale", [](auto& c, auto v, auto k) { c.params.pair_scale = parse_double(v, k); }},
      {"pair_rate", [](auto& c, auto v, auto k) { c.params.pair_rate = parse_double(v, k); }},
      {"sigma", [](auto& c, auto v, auto k) { c.params.sigma = parse_double(v, k); }},
      {"read_disturb_median", [](auto& c, auto v, auto k) { c.params.read_disturb_median = parse_double(v, k); }},
      {"latency_base", [](auto& c, auto v, auto k) { c.params.latency_base_us = parse_double(v, k); }},
      {"latency_spread", [](auto& c, auto v, auto k) { c.params.latency_spread = parse_double(v, k); }},
      {"latency_noise", [](auto& c, auto v, auto k) { c.params.latency_noise = parse_double(v, k); }},
      {"program_disturb", [](auto& c, auto v, auto k) { c.params.program_disturb = parse_bool(v, k); }},
      {"read_disturb", [](auto& c, auto v, auto k) { c.params.read_disturb = parse_bool(v, k); }},
  };
  return table;
}

bool is_manifest_key(std::string_view key) { return key == "tool_version" || key.starts_with("output."); }

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto at = [&](const std::string& msg) { return ConfigError("line " + std::to_string(line_no) + ": " + msg); };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw at("expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw at("missing key");
    if (!seen.emplace(key).second) throw at("duplicate key " + std::string(key));
    if (is_manifest_key(key)) continue;

    const auto it = setters().find(key);
    if (it == setters().end()) throw at("unknown key " + std::string(key));
    try {
      it->second(cfg, value, key);
    } catch (const ConfigError& e) {
      throw at(e.what());
    }
  }
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  char pattern[8];
  std::snprintf(pattern, sizeof pattern, "0x%02X", cfg.pattern);
  const auto b = [](bool v) { return v ? "true" : "false"; };
  out << "technique = " << to_string(cfg.technique) << '\n'
      << "block = " << cfg.block << '\n'
      << "target_page = " << cfg.target_page << '\n';
  if (cfg.report_page) out << "report_page = " << *cfg.report_page << '\n';
  out << "pattern = " << pattern << '\n' << "iterations = " << cfg.iterations << '\n';
  if (cfg.check_interval) out << "check_interval = " << *cfg.check_interval << '\n';
  const auto& p = cfg.params;
  out << "pre_program_all = " << b(cfg.pre_program_all) << '\n'
      << "first_page = " << cfg.first_page << '\n'
      << "last_page = " << cfg.last_page << '\n'
      << "chip_seed = " << cfg.chip_seed << '\n'
      << "experiment_seed = " << cfg.experiment_seed << '\n'
      << "blocks_per_chip = " << cfg.blocks_per_chip << '\n'
      << "intra_scale = " << format_double(p.intra_scale) << '\n'
      << "intra_rate = " << format_double(p.intra_rate) << '\n'
      << "pair_scale = " << format_double(p.pair_scale) << '\n'
      << "pair_rate = " << format_double(p.pair_rate) << '\n'
      << "sigma = " << format_double(p.sigma) << '\n'
      << "read_disturb_median = " << format_double(p.read_disturb_median) << '\n'
      << "latency_base = " << format_double(p.latency_base_us) << '\n'
      << "latency_spread = " << format_double(p.latency_spread) << '\n'
      << "latency_noise = " << format_double(p.latency_noise) << '\n'
      << "program_disturb = " << b(p.program_disturb) << '\n'
      << "read_disturb = " << b(p.read_disturb) << '\n';
}

void write_manifest(std::ostream& out, const ExperimentConfig& cfg, const RunOutputs& outputs) {
  out << "# flashpuf run manifest\n"
      << "tool_version = " << kToolVersion << '\n';
  write_config(out, cfg);
  out << "output.trace = " << outputs.trace << '\n'
      << "output.signature = " << outputs.signature << '\n'
      << "output.stable = " << outputs.stable << '\n'
      << "output.heatmap = " << outputs.heatmap << '\n';
}

}  // namespace flashpuf
