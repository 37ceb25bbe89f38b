// Line-oriented ASCII trace log.
//
//   FLIP <cycle> <block> <page> <byte> <bit>
//   LAT <cycle> <block> <page> <byte> - <microseconds>
//   SUMMARY <aggressor_page> <self|NEVER> <pred|NEVER> <succ|NEVER>
//
// Fields are separated by single spaces and lines end with '\n'. Latencies
// are written in shortest round-trip form, so write -> read is lossless.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flashpuf {

inline constexpr std::uint32_t kNever = 0xFFFFFFFFu;

struct FlipRecord {
  std::uint64_t cycle = 0;
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  std::uint32_t byte = 0;
  std::uint8_t bit = 0;

  friend bool operator==(const FlipRecord&, const FlipRecord&) = default;
};

struct LatencyRecord {
  std::uint64_t cycle = 0;
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  std::uint32_t byte = 0;
  double microseconds = 0.0;

  friend bool operator==(const LatencyRecord&, const LatencyRecord&) = default;
};

/// First-flip cycles around one aggressor page of a block sweep.
struct SummaryRecord {
  std::uint32_t aggressor_page = 0;
  std::uint32_t self = kNever;
  std::uint32_t pred = kNever;
  std::uint32_t succ = kNever;

  friend bool operator==(const SummaryRecord&, const SummaryRecord&) = default;
};

using TraceRecord = std::variant<FlipRecord, LatencyRecord, SummaryRecord>;

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string format_record(const TraceRecord& record);
/// Parses one line (without the newline). `line_number` is only used in
/// the error message.
TraceRecord parse_record(std::string_view line, std::size_t line_number = 1);

class TraceLog {
 public:
  void append(TraceRecord record) { records_.push_back(std::move(record)); }
  const std::vector<TraceRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

  std::vector<SummaryRecord> summaries() const;

  void write(std::ostream& out) const;
  /// Throws TraceParseError naming the first malformed line. Blank lines
  /// are ignored.
  static TraceLog read(std::istream& in);

  friend bool operator==(const TraceLog&, const TraceLog&) = default;

 private:
  std::vector<TraceRecord> records_;
};

}  // namespace flashpuf
