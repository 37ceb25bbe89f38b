// Signature extraction procedures: same-page, adjacent-page and whole-block
// program disturb, read disturb, and program latency.
//
// All procedures run against the FlashDevice seam and observe the device
// only through erase/program/read results, so recorded traces from real
// parts could be pushed through the same code. Bit index i in a signature
// is byte i / 8, bit i % 8 (LSB = 0).

#pragma once

#include "flashpuf/chip.hpp"
#include "flashpuf/device.hpp"
#include "flashpuf/trace.hpp"

#include <bitset>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flashpuf {

enum class Technique : std::uint8_t {
  SamePage = 0,
  AdjacentPage = 1,
  MultiPageSweep = 2,
  ReadDisturb = 3,
  ProgramLatency = 4,
};

std::string to_string(Technique technique);
std::optional<Technique> parse_technique(std::string_view name);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-bit first-flip cycles of one page; kNever for bits that did not flip.
/// For ProgramLatency the entries of a byte's eight bits carry that byte's
/// program latency in nanoseconds.
struct Signature {
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  std::vector<std::uint32_t> bits = std::vector<std::uint32_t>(kPageBits, kNever);
  std::uint32_t total_cycles = 0;
  std::uint8_t pattern = 0xAA;
  Technique technique = Technique::SamePage;

  std::size_t never_count() const;
  std::uint32_t first_flip() const;  // min over bits, kNever if none

  friend bool operator==(const Signature&, const Signature&) = default;
};

using BitMask = std::bitset<kPageBits>;

struct StableBitMap {
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  BitMask stable;
  std::uint32_t after_cycles = 0;

  static StableBitMap from_signature(const Signature& sig);

  friend bool operator==(const StableBitMap&, const StableBitMap&) = default;
};

struct Extraction {
  Signature signature;
  StableBitMap stable;
};

struct ExperimentConfig {
  Technique technique = Technique::SamePage;
  std::uint32_t block = 0;
  std::uint32_t target_page = 2;
  std::uint8_t pattern = 0xAA;
  std::uint32_t iterations = 10'000;
  /// Defaults to 1 for program techniques and 1000 for read disturb.
  std::optional<std::uint32_t> check_interval;
  bool pre_program_all = false;
  /// Page whose signature is reported by run: same-page target, adjacent
  /// pair partner, sweep aggregate page, read-disturb victim page.
  std::optional<std::uint32_t> report_page;
  std::uint32_t first_page = 0;  // sweep range, inclusive
  std::uint32_t last_page = kPagesPerBlock - 1;
  std::uint64_t chip_seed = 1;
  std::uint64_t experiment_seed = 1;
  std::uint32_t blocks_per_chip = kDefaultBlocksPerChip;
  DisturbParams params;

  /// Checks ranges that do not depend on the technique.
  void validate() const;
  std::uint32_t resolved_report_page() const;
  std::uint32_t resolved_check_interval() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Positions (0 = LSB) where observed differs from expected.
std::bitset<8> compare_bits(std::uint8_t observed, std::uint8_t expected);

/// Erase once, then program the target page with the pattern `iterations`
/// times, reading it back after every program and recording the first cycle
/// at which each bit deviates from the pattern.
Extraction extract_same_page(FlashDevice& dev, const ExperimentConfig& cfg, TraceLog* trace = nullptr);

struct AdjacentExtraction {
  Extraction predecessor;  // target - 1
  Extraction successor;    // target + 1
};

/// Hammers the target page and watches both neighbours. Neighbours are
/// compared against 0xFF, or against the pattern when pre_program_all is set
/// (every page of the block is then programmed once before hammering).
AdjacentExtraction extract_adjacent(FlashDevice& dev, const ExperimentConfig& cfg, TraceLog* trace = nullptr);

struct SweepOptions {
  std::uint32_t block = 0;
  std::uint32_t iterations_per_page = 10'000;
  std::uint8_t pattern = 0xAA;
  bool pre_program_all = false;
  std::uint32_t first_page = 0;
  std::uint32_t last_page = kPagesPerBlock - 1;
  /// When set, per-bit first flips of this page are merged (min) over every
  /// pass that observes it.
  std::optional<std::uint32_t> aggregate_page;
};

struct SweepResult {
  std::vector<SummaryRecord> rows;
  std::optional<Signature> aggregate;
};

/// For each aggressor page: erase, optionally pre-program the block, hammer
/// the page, and record the earliest flip on the page itself and on its two
/// neighbours. Emits one SUMMARY record per aggressor.
SweepResult extract_multi_page_sweep(FlashDevice& dev, const SweepOptions& options, TraceLog* trace = nullptr);

/// Deterministic "random" image written to a page in the read-disturb
/// experiment; depends only on the experiment seed, block and page.
PageData experiment_page_data(std::uint64_t experiment_seed, std::uint32_t block, std::uint32_t page);

/// Erase, program every page with experiment data, then read the target
/// page `iterations` times. Every `check_interval` reads all pages are read
/// back and the first failing cycle of each bit is recorded. Returns one
/// signature per page of the block.
std::vector<Signature> extract_read_disturb(FlashDevice& dev, const ExperimentConfig& cfg, TraceLog* trace = nullptr);

/// Programs an erased page one byte at a time (that byte 0x00, the rest
/// 0xFF) and returns the reported latency of each operation.
std::vector<double> extract_program_latency(FlashDevice& dev, std::uint32_t block, std::uint32_t page,
                                            TraceLog* trace = nullptr);

/// Whole-byte comparison variant: a byte counts as stable only if it never
/// deviated in any bit. Used to quantify what bitwise comparison gains.
std::size_t stable_byte_count(const Signature& sig);

}  // namespace flashpuf
