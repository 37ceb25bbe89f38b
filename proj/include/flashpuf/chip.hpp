// Behavioural SLC NAND cell array with program- and read-disturb physics.
//
// Cell model
// ----------
// Each bit is binary (1 = erased). Programming ANDs new data into a page.
// Every program pulse charges one disturb unit to
//   * each still-1 bit of the programmed page (intra-page disturb), and
//   * each still-1 bit of its pair partner, page XOR 1 (pair disturb).
// Every read charges one read-disturb unit to each still-1 bit of the other
// pages of the block. A bit flips 1->0 once any of its three accumulators
// reaches that bit's threshold for the role. Erase restores the block and
// clears all accumulators.
//
// Thresholds
// ----------
// Within one (block, page, role) the 16,896 thresholds are the lognormal
// quantiles exp(mu + sigma * z_k), z_k = Phi^-1((k + 0.5) / N), and a
// seed-keyed permutation decides which cell receives stratum k. The location
// mu is set so that the weakest cell (k = 0) sits exactly on the calibrated
// first-flip curve:
//   intra, page p:                  intra_scale * exp(intra_rate * p)
//   pair partner of aggressor p:    pair_scale  * exp(pair_rate  * p)
//   read disturb:                   read_disturb_median
// Thresholds are rounded to whole pulses and never drop below 2, so a
// single operation cannot flip a bit. With sigma = 0 every threshold of a
// page equals the rounded curve value.
//
// Since every still-1 bit of a page carries the same accumulator value, the
// per-bit accumulators are stored as per-page counters and flips are found by
// walking the strata in threshold order.

#pragma once

#include "flashpuf/protocol.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace flashpuf {

using PageData = std::array<std::uint8_t, kPageBytes>;
using Status = std::uint8_t;  // bit 0 set on failure

inline constexpr Status kStatusOk = 0x00;

inline PageData erased_page() {
  PageData p;
  p.fill(0xFF);
  return p;
}

inline PageData filled_page(std::uint8_t value) {
  PageData p;
  p.fill(value);
  return p;
}

struct DisturbParams {
  // Log-domain least-squares fit of the measured first-flip table
  // (pages 1..7, "<1k" read as 500 cycles).
  double intra_scale = 204.35055338906463;
  double intra_rate = 0.6103980255946827;
  double pair_scale = 350.59139697043014;
  double pair_rate = 0.8015296382840568;
  double sigma = 0.6;
  double read_disturb_median = 3'000'000.0;
  double latency_base_us = 200.0;
  double latency_spread = 0.05;
  double latency_noise = 0.01;
  bool program_disturb = true;
  bool read_disturb = true;

  /// Throws std::invalid_argument on non-positive scales/medians, negative
  /// sigma or non-finite values.
  void validate() const;

  double intra_first_flip(std::uint32_t page) const;
  double pair_first_flip(std::uint32_t aggressor_page) const;

  friend bool operator==(const DisturbParams&, const DisturbParams&) = default;
};

enum class DisturbRole : std::uint8_t { Intra = 0, Pair = 1, Read = 2 };

struct FlipEvent {
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  std::uint32_t byte = 0;
  std::uint8_t bit = 0;
  DisturbRole role = DisturbRole::Intra;
  std::uint64_t accumulator = 0;  // units received when the bit flipped

  friend bool operator==(const FlipEvent&, const FlipEvent&) = default;
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FlashChip {
 public:
  FlashChip(std::uint64_t seed, ChipGeometry geometry = {}, DisturbParams params = {});

  FlashChip(const FlashChip&) = delete;
  FlashChip& operator=(const FlashChip&) = delete;
  FlashChip(FlashChip&&) noexcept = default;
  FlashChip& operator=(FlashChip&&) noexcept = default;
  ~FlashChip();

  std::uint64_t seed() const { return seed_; }
  const ChipGeometry& geometry() const { return geometry_; }
  const DisturbParams& params() const { return params_; }

  Status erase_block(std::uint32_t block);
  Status program_page(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data);
  PageData read_page(std::uint32_t block, std::uint32_t page);
  void read_page_into(std::uint32_t block, std::uint32_t page, std::span<std::uint8_t, kPageBytes> out);

  /// Equivalent to `count` consecutive read_page calls; the read-disturb
  /// accumulators are charged in one step.
  PageData read_page_repeated(std::uint32_t block, std::uint32_t page, std::uint64_t count);

  /// Programs the page and returns the operation time in microseconds.
  double program_latency(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data);

  /// Flips caused by the most recent program or read call.
  std::span<const FlipEvent> last_flips() const { return last_flips_; }

  // Introspection ----------------------------------------------------------

  std::uint64_t intra_units(std::uint32_t block, std::uint32_t page) const;
  std::uint64_t pair_units(std::uint32_t block, std::uint32_t page) const;
  std::uint64_t read_units(std::uint32_t block, std::uint32_t page) const;

  /// Threshold (in disturb units) of one cell for a role.
  std::uint64_t cell_threshold(std::uint32_t block, std::uint32_t page, std::uint32_t byte, unsigned bit,
                               DisturbRole role) const;

  /// Deterministic per-(page, byte) latency offset in units of latency_spread.
  double latency_variation(std::uint32_t block, std::uint32_t page, std::uint32_t byte) const;

  std::uint64_t count_ones(std::uint32_t block) const;

  // Snapshot ---------------------------------------------------------------

  /// Versioned little-endian blob: magic "FPUF1", geometry, seed, params,
  /// program counter, then every materialised block's cells and
  /// accumulators.
  void save(std::ostream& out) const;
  static FlashChip load(std::istream& in);

 private:
  struct RoleCursor {
    std::uint32_t next_stratum = 0;
    std::uint64_t next_threshold = 0;  // 0 = not yet computed
  };
  struct PageCounters {
    std::uint64_t intra = 0;
    std::uint64_t pair = 0;
    std::uint64_t self_reads = 0;
    std::array<RoleCursor, 3> cursors{};
  };
  struct Block {
    std::vector<std::uint8_t> cells;
    std::vector<PageCounters> pages;
    std::uint64_t block_reads = 0;
  };

  void check_block(std::uint32_t block) const;
  void check_page(std::uint32_t block, std::uint32_t page) const;
  Block& materialize(std::uint32_t block);
  const Block* find_block(std::uint32_t block) const { return blocks_[block].get(); }

  void apply_disturb_pulse(std::uint32_t block, std::uint32_t aggressor_page);
  void charge_reads(std::uint32_t block, std::uint32_t page, std::uint64_t count);
  void settle(std::uint32_t block, Block& state, std::uint32_t page, DisturbRole role, std::uint64_t units);
  void resync_cursor(std::uint32_t block, std::uint32_t page, DisturbRole role, std::uint64_t units);

  double role_first_flip(std::uint32_t page, DisturbRole role) const;
  bool role_enabled(DisturbRole role) const;
  std::uint64_t stratum_threshold(std::uint32_t page, DisturbRole role, std::uint32_t stratum) const;
  const std::vector<std::uint16_t>& stratum_order(std::uint32_t block, std::uint32_t page, DisturbRole role) const;

  std::uint64_t seed_;
  ChipGeometry geometry_;
  DisturbParams params_;
  std::vector<std::unique_ptr<Block>> blocks_;
  std::uint64_t programs_issued_ = 0;
  std::vector<FlipEvent> last_flips_;
  mutable std::unordered_map<std::uint64_t, std::vector<std::uint16_t>> order_cache_;
};

}  // namespace flashpuf
