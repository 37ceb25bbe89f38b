#include "flashpuf/chip.hpp"

#include "flashpuf/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace flashpuf {

namespace {

constexpr std::uint64_t kUnreachable = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kMinThreshold = 2;
constexpr std::uint32_t kStrata = kPageBits;

// z_k - z_0 for the page strata, shared by all roles and pages.
const std::vector<double>& stratum_shape() {
  static const std::vector<double> shape = [] {
    std::vector<double> s(kStrata);
    const double z0 = rng::normal_quantile(0.5 / kStrata);
    for (std::uint32_t k = 0; k < kStrata; ++k) {
      s[k] = rng::normal_quantile((k + 0.5) / kStrata) - z0;
    }
    return s;
  }();
  return shape;
}

std::uint64_t to_pulses(double units) {
  if (!(units < 1e18)) return kUnreachable;
  return std::max<std::uint64_t>(kMinThreshold, static_cast<std::uint64_t>(std::llround(units)));
}

rng::Stream order_stream(DisturbRole role) {
  switch (role) {
    case DisturbRole::Intra: return rng::Stream::IntraOrder;
    case DisturbRole::Pair: return rng::Stream::PairOrder;
    case DisturbRole::Read: return rng::Stream::ReadOrder;
  }
  return rng::Stream::IntraOrder;
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void DisturbParams::validate() const {
  if (!finite_positive(intra_scale) || !finite_positive(pair_scale)) {
    throw std::invalid_argument("disturb scales must be positive");
  }
  if (!std::isfinite(intra_rate) || !std::isfinite(pair_rate)) {
    throw std::invalid_argument("disturb rates must be finite");
  }
  if (!std::isfinite(sigma) || sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (!finite_positive(read_disturb_median)) throw std::invalid_argument("read_disturb_median must be positive");
  if (!finite_positive(latency_base_us)) throw std::invalid_argument("latency_base must be positive");
  if (!std::isfinite(latency_spread) || latency_spread < 0.0) {
    throw std::invalid_argument("latency_spread must be >= 0");
  }
  if (!std::isfinite(latency_noise) || latency_noise < 0.0) {
    throw std::invalid_argument("latency_noise must be >= 0");
  }
}

double DisturbParams::intra_first_flip(std::uint32_t page) const {
  return intra_scale * std::exp(intra_rate * page);
}

double DisturbParams::pair_first_flip(std::uint32_t aggressor_page) const {
  return pair_scale * std::exp(pair_rate * aggressor_page);
}

FlashChip::FlashChip(std::uint64_t seed, ChipGeometry geometry, DisturbParams params)
    : seed_(seed), geometry_(geometry), params_(params) {
  geometry_.validate();
  params_.validate();
  blocks_.resize(geometry_.blocks_per_chip);
}

FlashChip::~FlashChip() = default;

void FlashChip::check_block(std::uint32_t block) const {
  if (block >= geometry_.blocks_per_chip) throw AddressError("block " + std::to_string(block) + " out of range");
}

void FlashChip::check_page(std::uint32_t block, std::uint32_t page) const {
  check_block(block);
  if (page >= geometry_.pages_per_block) throw AddressError("page " + std::to_string(page) + " out of range");
}

FlashChip::Block& FlashChip::materialize(std::uint32_t block) {
  auto& slot = blocks_[block];
  if (!slot) {
    slot = std::make_unique<Block>();
    slot->cells.assign(static_cast<std::size_t>(geometry_.pages_per_block) * kPageBytes, 0xFF);
    slot->pages.resize(geometry_.pages_per_block);
  }
  return *slot;
}

Status FlashChip::erase_block(std::uint32_t block) {
  check_block(block);
  last_flips_.clear();
  blocks_[block].reset();  // an absent block reads as erased
  return kStatusOk;
}

Status FlashChip::program_page(std::uint32_t block, std::uint32_t page,
                               std::span<const std::uint8_t, kPageBytes> data) {
  check_page(block, page);
  last_flips_.clear();
  Block& state = materialize(block);
  std::uint8_t* cells = state.cells.data() + static_cast<std::size_t>(page) * kPageBytes;
  for (std::size_t i = 0; i < kPageBytes; ++i) cells[i] &= data[i];
  apply_disturb_pulse(block, page);
  ++programs_issued_;
  return kStatusOk;
}

void FlashChip::apply_disturb_pulse(std::uint32_t block, std::uint32_t aggressor_page) {
  Block& state = *blocks_[block];
  const std::uint32_t partner = aggressor_page ^ 1u;
  PageCounters& self = state.pages[aggressor_page];
  ++self.intra;
  settle(block, state, aggressor_page, DisturbRole::Intra, self.intra);
  if (partner < geometry_.pages_per_block) {
    PageCounters& victim = state.pages[partner];
    ++victim.pair;
    settle(block, state, partner, DisturbRole::Pair, victim.pair);
  }
}

PageData FlashChip::read_page(std::uint32_t block, std::uint32_t page) {
  PageData out;
  read_page_into(block, page, out);
  return out;
}

void FlashChip::read_page_into(std::uint32_t block, std::uint32_t page, std::span<std::uint8_t, kPageBytes> out) {
  check_page(block, page);
  last_flips_.clear();
  charge_reads(block, page, 1);
  const Block& state = *blocks_[block];
  std::memcpy(out.data(), state.cells.data() + static_cast<std::size_t>(page) * kPageBytes, kPageBytes);
}

PageData FlashChip::read_page_repeated(std::uint32_t block, std::uint32_t page, std::uint64_t count) {
  check_page(block, page);
  last_flips_.clear();
  if (count > 0) charge_reads(block, page, count);
  PageData out;
  if (const Block* state = find_block(block)) {
    std::memcpy(out.data(), state->cells.data() + static_cast<std::size_t>(page) * kPageBytes, kPageBytes);
  } else {
    out.fill(0xFF);
  }
  return out;
}

void FlashChip::charge_reads(std::uint32_t block, std::uint32_t page, std::uint64_t count) {
  Block& state = materialize(block);
  state.block_reads += count;
  state.pages[page].self_reads += count;
  if (!params_.read_disturb) return;
  for (std::uint32_t q = 0; q < geometry_.pages_per_block; ++q) {
    if (q == page) continue;
    settle(block, state, q, DisturbRole::Read, state.block_reads - state.pages[q].self_reads);
  }
}

void FlashChip::settle(std::uint32_t block, Block& state, std::uint32_t page, DisturbRole role, std::uint64_t units) {
  if (!role_enabled(role)) return;
  RoleCursor& cursor = state.pages[page].cursors[static_cast<std::size_t>(role)];
  if (cursor.next_threshold == 0) cursor.next_threshold = stratum_threshold(page, role, cursor.next_stratum);
  if (units < cursor.next_threshold) return;

  const auto& order = stratum_order(block, page, role);
  std::uint8_t* cells = state.cells.data() + static_cast<std::size_t>(page) * kPageBytes;
  while (cursor.next_stratum < kStrata && cursor.next_threshold <= units) {
    const std::uint32_t cell = order[cursor.next_stratum];
    const std::uint32_t byte = cell >> 3;
    const unsigned bit = cell & 7u;
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << bit);
    if (cells[byte] & mask) {
      cells[byte] = static_cast<std::uint8_t>(cells[byte] & ~mask);
      last_flips_.push_back({block, page, byte, static_cast<std::uint8_t>(bit), role, cursor.next_threshold});
    }
    ++cursor.next_stratum;
    cursor.next_threshold =
        cursor.next_stratum < kStrata ? stratum_threshold(page, role, cursor.next_stratum) : kUnreachable;
  }
}

void FlashChip::resync_cursor(std::uint32_t block, std::uint32_t page, DisturbRole role, std::uint64_t units) {
  Block& state = *blocks_[block];
  RoleCursor& cursor = state.pages[page].cursors[static_cast<std::size_t>(role)];
  cursor = {};
  if (!role_enabled(role)) return;
  // First stratum whose threshold exceeds the accumulated units.
  std::uint32_t lo = 0;
  std::uint32_t hi = kStrata;
  while (lo < hi) {
    const std::uint32_t mid = lo + (hi - lo) / 2;
    if (stratum_threshold(page, role, mid) <= units) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  cursor.next_stratum = lo;
  cursor.next_threshold = lo < kStrata ? stratum_threshold(page, role, lo) : kUnreachable;
}

bool FlashChip::role_enabled(DisturbRole role) const {
  return role == DisturbRole::Read ? params_.read_disturb : params_.program_disturb;
}

double FlashChip::role_first_flip(std::uint32_t page, DisturbRole role) const {
  switch (role) {
    case DisturbRole::Intra: return params_.intra_first_flip(page);
    case DisturbRole::Pair: return params_.pair_first_flip(page ^ 1u);
    case DisturbRole::Read: return params_.read_disturb_median;
  }
  return 0.0;
}

std::uint64_t FlashChip::stratum_threshold(std::uint32_t page, DisturbRole role, std::uint32_t stratum) const {
  const double first = role_first_flip(page, role);
  if (params_.sigma == 0.0) return to_pulses(first);
  return to_pulses(first * std::exp(params_.sigma * stratum_shape()[stratum]));
}

const std::vector<std::uint16_t>& FlashChip::stratum_order(std::uint32_t block, std::uint32_t page,
                                                           DisturbRole role) const {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(block) << 16) | (static_cast<std::uint64_t>(page) << 2) | static_cast<std::uint64_t>(role);
  auto it = order_cache_.find(key);
  if (it != order_cache_.end()) return it->second;

  std::vector<std::uint16_t> order(kStrata);
  std::iota(order.begin(), order.end(), std::uint16_t{0});
  rng::KeyedStream stream(rng::hash_key({seed_, static_cast<std::uint64_t>(order_stream(role)), block, page}));
  for (std::uint32_t i = kStrata - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(stream.below(i + 1));
    std::swap(order[i], order[j]);
  }
  return order_cache_.emplace(key, std::move(order)).first->second;
}

double FlashChip::program_latency(std::uint32_t block, std::uint32_t page,
                                  std::span<const std::uint8_t, kPageBytes> data) {
  program_page(block, page, data);

  double variation = 0.0;
  std::size_t programmed = 0;
  for (std::uint32_t byte = 0; byte < kPageBytes; ++byte) {
    if (data[byte] == 0xFF) continue;
    variation += latency_variation(block, page, byte);
    ++programmed;
  }
  if (programmed > 0) variation /= static_cast<double>(programmed);

  const double base = params_.latency_base_us;
  double latency = base * (1.0 + params_.latency_spread * variation);
  // Noise is keyed by the program count, so latency does not depend on
  // which device path issued the operation.
  const std::uint64_t call = programs_issued_ - 1;
  if (params_.latency_noise > 0.0) {
    latency += base * params_.latency_noise *
               rng::standard_normal(rng::hash_key({seed_, static_cast<std::uint64_t>(rng::Stream::LatencyNoise), call}));
  }
  return std::max(latency, base * 1e-3);
}

double FlashChip::latency_variation(std::uint32_t block, std::uint32_t page, std::uint32_t byte) const {
  return rng::standard_normal(
      rng::hash_key({seed_, static_cast<std::uint64_t>(rng::Stream::LatencyVariation), block, page, byte}));
}

std::uint64_t FlashChip::intra_units(std::uint32_t block, std::uint32_t page) const {
  check_page(block, page);
  const Block* state = find_block(block);
  return state ? state->pages[page].intra : 0;
}

std::uint64_t FlashChip::pair_units(std::uint32_t block, std::uint32_t page) const {
  check_page(block, page);
  const Block* state = find_block(block);
  return state ? state->pages[page].pair : 0;
}

std::uint64_t FlashChip::read_units(std::uint32_t block, std::uint32_t page) const {
  check_page(block, page);
  const Block* state = find_block(block);
  return state ? state->block_reads - state->pages[page].self_reads : 0;
}

std::uint64_t FlashChip::cell_threshold(std::uint32_t block, std::uint32_t page, std::uint32_t byte, unsigned bit,
                                        DisturbRole role) const {
  check_page(block, page);
  if (byte >= kPageBytes || bit > 7) throw AddressError("cell out of range");
  const auto& order = stratum_order(block, page, role);
  const auto cell = static_cast<std::uint16_t>(byte * 8 + bit);
  const auto it = std::find(order.begin(), order.end(), cell);
  return stratum_threshold(page, role, static_cast<std::uint32_t>(it - order.begin()));
}

std::uint64_t FlashChip::count_ones(std::uint32_t block) const {
  check_block(block);
  const Block* state = find_block(block);
  if (!state) return static_cast<std::uint64_t>(geometry_.pages_per_block) * kPageBits;
  std::uint64_t ones = 0;
  for (std::uint8_t b : state->cells) ones += static_cast<std::uint64_t>(std::popcount(b));
  return ones;
}

// ---------------------------------------------------------------------------
// Snapshot

namespace {

constexpr char kSnapshotMagic[5] = {'F', 'P', 'U', 'F', '1'};

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) put_u8(out, static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) put_u8(out, static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw SnapshotError("snapshot truncated");
  return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8(in)) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(get_u8(in)) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void FlashChip::save(std::ostream& out) const {
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put_u32(out, geometry_.data_bytes_per_page);
  put_u32(out, geometry_.spare_bytes_per_page);
  put_u32(out, geometry_.pages_per_block);
  put_u32(out, geometry_.blocks_per_chip);
  put_u64(out, seed_);
  for (double v : {params_.intra_scale, params_.intra_rate, params_.pair_scale, params_.pair_rate, params_.sigma,
                   params_.read_disturb_median, params_.latency_base_us, params_.latency_spread,
                   params_.latency_noise}) {
    put_f64(out, v);
  }
  put_u8(out, params_.program_disturb ? 1 : 0);
  put_u8(out, params_.read_disturb ? 1 : 0);
  put_u64(out, programs_issued_);

  std::uint32_t materialized = 0;
  for (const auto& b : blocks_) materialized += b ? 1 : 0;
  put_u32(out, materialized);
  for (std::uint32_t index = 0; index < blocks_.size(); ++index) {
    const Block* state = blocks_[index].get();
    if (!state) continue;
    put_u32(out, index);
    out.write(reinterpret_cast<const char*>(state->cells.data()), static_cast<std::streamsize>(state->cells.size()));
    put_u64(out, state->block_reads);
    for (const PageCounters& page : state->pages) {
      put_u64(out, page.intra);
      put_u64(out, page.pair);
      put_u64(out, page.self_reads);
    }
  }
  if (!out) throw SnapshotError("snapshot write failed");
}

FlashChip FlashChip::load(std::istream& in) {
  char magic[sizeof kSnapshotMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) throw SnapshotError("bad snapshot magic");

  ChipGeometry geometry;
  geometry.data_bytes_per_page = get_u32(in);
  geometry.spare_bytes_per_page = get_u32(in);
  geometry.pages_per_block = get_u32(in);
  geometry.blocks_per_chip = get_u32(in);
  const std::uint64_t seed = get_u64(in);
  DisturbParams params;
  for (double* field : {&params.intra_scale, &params.intra_rate, &params.pair_scale, &params.pair_rate,
                        &params.sigma, &params.read_disturb_median, &params.latency_base_us,
                        &params.latency_spread, &params.latency_noise}) {
    *field = get_f64(in);
  }
  params.program_disturb = get_u8(in) != 0;
  params.read_disturb = get_u8(in) != 0;

  FlashChip chip = [&] {
    try {
      return FlashChip(seed, geometry, params);
    } catch (const std::invalid_argument& e) {
      throw SnapshotError(std::string("invalid snapshot header: ") + e.what());
    }
  }();
  chip.programs_issued_ = get_u64(in);

  const std::uint32_t materialized = get_u32(in);
  for (std::uint32_t n = 0; n < materialized; ++n) {
    const std::uint32_t index = get_u32(in);
    if (index >= geometry.blocks_per_chip || chip.blocks_[index]) throw SnapshotError("bad block index in snapshot");
    Block& state = chip.materialize(index);
    in.read(reinterpret_cast<char*>(state.cells.data()), static_cast<std::streamsize>(state.cells.size()));
    if (!in) throw SnapshotError("snapshot truncated");
    state.block_reads = get_u64(in);
    for (PageCounters& page : state.pages) {
      page.intra = get_u64(in);
      page.pair = get_u64(in);
      page.self_reads = get_u64(in);
      if (page.self_reads > state.block_reads) throw SnapshotError("inconsistent read counters");
    }
    for (std::uint32_t p = 0; p < geometry.pages_per_block; ++p) {
      chip.resync_cursor(index, p, DisturbRole::Intra, state.pages[p].intra);
      chip.resync_cursor(index, p, DisturbRole::Pair, state.pages[p].pair);
      chip.resync_cursor(index, p, DisturbRole::Read, state.block_reads - state.pages[p].self_reads);
    }
  }
  return chip;
}

}  // namespace flashpuf
