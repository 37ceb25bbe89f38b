#include "flashpuf/trace.hpp"

#include <charconv>
#include <istream>
#include <limits>
#include <ostream>

namespace flashpuf {

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string cycles_or_never(std::uint32_t v) { return v == kNever ? "NEVER" : std::to_string(v); }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t end = line.find(' ', start);
    fields.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return fields;
}

template <typename T>
T parse_uint(std::string_view field, std::size_t line, const char* name) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc{} || ptr != last) {
    throw TraceParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

std::uint32_t parse_cycles(std::string_view field, std::size_t line, const char* name) {
  if (field == "NEVER") return kNever;
  const auto v = parse_uint<std::uint32_t>(field, line, name);
  if (v == kNever) throw TraceParseError(line, std::string(name) + " collides with the NEVER sentinel");
  return v;
}

}  // namespace

std::string format_record(const TraceRecord& record) {
  struct Formatter {
    std::string operator()(const FlipRecord& r) const {
      return "FLIP " + std::to_string(r.cycle) + ' ' + std::to_string(r.block) + ' ' + std::to_string(r.page) + ' ' +
             std::to_string(r.byte) + ' ' + std::to_string(r.bit);
    }
    std::string operator()(const LatencyRecord& r) const {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, r.microseconds);
      return "LAT " + std::to_string(r.cycle) + ' ' + std::to_string(r.block) + ' ' + std::to_string(r.page) + ' ' +
             std::to_string(r.byte) + " - " + std::string(buf, res.ptr);
    }
    std::string operator()(const SummaryRecord& r) const {
      return "SUMMARY " + std::to_string(r.aggressor_page) + ' ' + cycles_or_never(r.self) + ' ' +
             cycles_or_never(r.pred) + ' ' + cycles_or_never(r.succ);
    }
  };
  return std::visit(Formatter{}, record);
}

TraceRecord parse_record(std::string_view line, std::size_t n) {
  const auto f = split_fields(line);
  const std::string_view kind = f.front();

  if (kind == "FLIP") {
    if (f.size() != 6) throw TraceParseError(n, "FLIP expects 5 fields");
    FlipRecord r;
    r.cycle = parse_uint<std::uint64_t>(f[1], n, "cycle");
    r.block = parse_uint<std::uint32_t>(f[2], n, "block");
    r.page = parse_uint<std::uint32_t>(f[3], n, "page");
    r.byte = parse_uint<std::uint32_t>(f[4], n, "byte");
    const auto bit = parse_uint<std::uint32_t>(f[5], n, "bit");
    if (bit > 7) throw TraceParseError(n, "bit index above 7");
    r.bit = static_cast<std::uint8_t>(bit);
    return r;
  }
  if (kind == "LAT") {
    if (f.size() != 7 || f[5] != "-") throw TraceParseError(n, "LAT expects '<cycle> <block> <page> <byte> - <us>'");
    LatencyRecord r;
    r.cycle = parse_uint<std::uint64_t>(f[1], n, "cycle");
    r.block = parse_uint<std::uint32_t>(f[2], n, "block");
    r.page = parse_uint<std::uint32_t>(f[3], n, "page");
    r.byte = parse_uint<std::uint32_t>(f[4], n, "byte");
    const auto* first = f[6].data();
    const auto* last = f[6].data() + f[6].size();
    const auto [ptr, ec] = std::from_chars(first, last, r.microseconds);
    if (f[6].empty() || ec != std::errc{} || ptr != last || !(r.microseconds >= 0.0) ||
        r.microseconds == std::numeric_limits<double>::infinity()) {
      throw TraceParseError(n, "bad latency '" + std::string(f[6]) + "'");
    }
    return r;
  }
  if (kind == "SUMMARY") {
    if (f.size() != 5) throw TraceParseError(n, "SUMMARY expects 4 fields");
    SummaryRecord r;
    r.aggressor_page = parse_uint<std::uint32_t>(f[1], n, "aggressor page");
    r.self = parse_cycles(f[2], n, "self cycles");
    r.pred = parse_cycles(f[3], n, "pred cycles");
    r.succ = parse_cycles(f[4], n, "succ cycles");
    return r;
  }
  throw TraceParseError(n, "unknown record kind '" + std::string(kind) + "'");
}

std::vector<SummaryRecord> TraceLog::summaries() const {
  std::vector<SummaryRecord> out;
  for (const auto& r : records_) {
    if (const auto* s = std::get_if<SummaryRecord>(&r)) out.push_back(*s);
  }
  return out;
}

void TraceLog::write(std::ostream& out) const {
  for (const auto& r : records_) out << format_record(r) << '\n';
}

TraceLog TraceLog::read(std::istream& in) {
  TraceLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    log.append(parse_record(line, n));
  }
  return log;
}

}  // namespace flashpuf
