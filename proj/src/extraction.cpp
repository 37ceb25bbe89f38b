#include "flashpuf/extraction.hpp"

#include "flashpuf/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

namespace flashpuf {

std::string to_string(Technique technique) {
  switch (technique) {
    case Technique::SamePage: return "same_page";
    case Technique::AdjacentPage: return "adjacent_page";
    case Technique::MultiPageSweep: return "multi_page_sweep";
    case Technique::ReadDisturb: return "read_disturb";
    case Technique::ProgramLatency: return "program_latency";
  }
  return "?";
}

std::optional<Technique> parse_technique(std::string_view name) {
  for (Technique t : {Technique::SamePage, Technique::AdjacentPage, Technique::MultiPageSweep,
                      Technique::ReadDisturb, Technique::ProgramLatency}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::size_t Signature::never_count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), kNever));
}

std::uint32_t Signature::first_flip() const {
  return bits.empty() ? kNever : *std::min_element(bits.begin(), bits.end());
}

StableBitMap StableBitMap::from_signature(const Signature& sig) {
  StableBitMap map{sig.block, sig.page, {}, sig.total_cycles};
  for (std::size_t i = 0; i < sig.bits.size() && i < kPageBits; ++i) map.stable[i] = sig.bits[i] == kNever;
  return map;
}

void ExperimentConfig::validate() const {
  if (blocks_per_chip == 0 || blocks_per_chip > 1024) throw ConfigError("blocks_per_chip must be in [1, 1024]");
  if (block >= blocks_per_chip) throw ConfigError("block out of range");
  if (target_page >= kPagesPerBlock) throw ConfigError("target_page out of range");
  if (report_page && *report_page >= kPagesPerBlock) throw ConfigError("report_page out of range");
  if (check_interval && *check_interval == 0) throw ConfigError("check_interval must be >= 1");
  if (first_page > last_page || last_page >= kPagesPerBlock) throw ConfigError("bad sweep page range");
  if (iterations == kNever) throw ConfigError("iterations collides with the NEVER sentinel");
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::uint32_t ExperimentConfig::resolved_report_page() const {
  if (report_page) return *report_page;
  switch (technique) {
    case Technique::AdjacentPage:
    case Technique::ReadDisturb:
      return target_page ^ 1u;
    default:
      return target_page;
  }
}

std::uint32_t ExperimentConfig::resolved_check_interval() const {
  if (check_interval) return *check_interval;
  return technique == Technique::ReadDisturb ? 1000u : 1u;
}

std::bitset<8> compare_bits(std::uint8_t observed, std::uint8_t expected) {
  return std::bitset<8>(static_cast<unsigned>(observed ^ expected));
}

std::size_t stable_byte_count(const Signature& sig) {
  std::size_t stable = 0;
  for (std::size_t byte = 0; byte < kPageBytes; ++byte) {
    bool ok = true;
    for (std::size_t bit = 0; bit < 8 && ok; ++bit) ok = sig.bits[byte * 8 + bit] == kNever;
    stable += ok ? 1 : 0;
  }
  return stable;
}

namespace {

/// Records, per bit, the first observation cycle at which a page differs
/// from its expected image.
class FirstFlipTracker {
 public:
  FirstFlipTracker(Signature& sig, const PageData& expected) : sig_(&sig), expected_(expected) {}

  void observe(const PageData& actual, std::uint32_t cycle, TraceLog* trace) {
    for (std::size_t chunk = 0; chunk < kPageBytes; chunk += 8) {
      std::uint64_t a;
      std::uint64_t e;
      std::memcpy(&a, actual.data() + chunk, 8);
      std::memcpy(&e, expected_.data() + chunk, 8);
      if (a == e) continue;
      for (std::size_t byte = chunk; byte < chunk + 8; ++byte) {
        const auto fresh = static_cast<std::uint8_t>((actual[byte] ^ expected_[byte]) & ~seen_[byte]);
        if (fresh == 0) continue;
        seen_[byte] |= fresh;
        const std::bitset<8> changed(fresh);
        for (unsigned bit = 0; bit < 8; ++bit) {
          if (!changed[bit]) continue;
          sig_->bits[byte * 8 + bit] = cycle;
          if (trace) {
            trace->append(FlipRecord{cycle, sig_->block, sig_->page, static_cast<std::uint32_t>(byte),
                                     static_cast<std::uint8_t>(bit)});
          }
        }
      }
    }
  }

 private:
  Signature* sig_;
  PageData expected_;
  std::array<std::uint8_t, kPageBytes> seen_{};
};

Signature blank_signature(std::uint32_t block, std::uint32_t page, std::uint32_t total, std::uint8_t pattern,
                          Technique technique) {
  Signature sig;
  sig.block = block;
  sig.page = page;
  sig.total_cycles = total;
  sig.pattern = pattern;
  sig.technique = technique;
  return sig;
}

void require_technique(const ExperimentConfig& cfg, Technique expected) {
  if (cfg.technique != expected) {
    throw ConfigError("configuration technique is " + to_string(cfg.technique) + ", expected " + to_string(expected));
  }
  cfg.validate();
}

void require_ok(Status status, const char* what) {
  if (status & kStatusFail) throw DeviceError(std::string(what) + " reported failure status");
}

void program_whole_block(FlashDevice& dev, std::uint32_t block, const PageData& data) {
  for (std::uint32_t p = 0; p < kPagesPerBlock; ++p) require_ok(dev.program_page(block, p, data), "program");
}

}  // namespace

Extraction extract_same_page(FlashDevice& dev, const ExperimentConfig& cfg, TraceLog* trace) {
  require_technique(cfg, Technique::SamePage);
  const PageData pattern = filled_page(cfg.pattern);
  Signature sig = blank_signature(cfg.block, cfg.target_page, cfg.iterations, cfg.pattern, Technique::SamePage);
  FirstFlipTracker tracker(sig, pattern);

  require_ok(dev.erase_block(cfg.block), "erase");
  PageData observed;
  for (std::uint32_t cycle = 1; cycle <= cfg.iterations; ++cycle) {
    require_ok(dev.program_page(cfg.block, cfg.target_page, pattern), "program");
    dev.read_page(cfg.block, cfg.target_page, observed);
    tracker.observe(observed, cycle, trace);
  }
  StableBitMap stable = StableBitMap::from_signature(sig);
  return {std::move(sig), std::move(stable)};
}

AdjacentExtraction extract_adjacent(FlashDevice& dev, const ExperimentConfig& cfg, TraceLog* trace) {
  require_technique(cfg, Technique::AdjacentPage);
  if (cfg.target_page == 0 || cfg.target_page + 1 >= kPagesPerBlock) {
    throw ConfigError("adjacent extraction needs a target page with two neighbours (1..62)");
  }
  const PageData pattern = filled_page(cfg.pattern);
  const PageData expected = cfg.pre_program_all ? pattern : erased_page();
  const std::uint32_t before = cfg.target_page - 1;
  const std::uint32_t after = cfg.target_page + 1;

  Signature pred = blank_signature(cfg.block, before, cfg.iterations, cfg.pattern, Technique::AdjacentPage);
  Signature succ = blank_signature(cfg.block, after, cfg.iterations, cfg.pattern, Technique::AdjacentPage);
  FirstFlipTracker pred_tracker(pred, expected);
  FirstFlipTracker succ_tracker(succ, expected);

  require_ok(dev.erase_block(cfg.block), "erase");
  if (cfg.pre_program_all) program_whole_block(dev, cfg.block, pattern);

  PageData observed;
  for (std::uint32_t cycle = 1; cycle <= cfg.iterations; ++cycle) {
    require_ok(dev.program_page(cfg.block, cfg.target_page, pattern), "program");
    dev.read_page(cfg.block, before, observed);
    pred_tracker.observe(observed, cycle, trace);
    dev.read_page(cfg.block, after, observed);
    succ_tracker.observe(observed, cycle, trace);
  }

  AdjacentExtraction out;
  out.predecessor.stable = StableBitMap::from_signature(pred);
  out.predecessor.signature = std::move(pred);
  out.successor.stable = StableBitMap::from_signature(succ);
  out.successor.signature = std::move(succ);
  return out;
}

SweepResult extract_multi_page_sweep(FlashDevice& dev, const SweepOptions& options, TraceLog* trace) {
  if (options.block >= dev.blocks()) throw ConfigError("block out of range");
  if (options.first_page > options.last_page || options.last_page >= kPagesPerBlock) {
    throw ConfigError("bad sweep page range");
  }
  if (options.aggregate_page && *options.aggregate_page >= kPagesPerBlock) {
    throw ConfigError("aggregate page out of range");
  }

  const PageData pattern = filled_page(options.pattern);
  const PageData neighbour_expected = options.pre_program_all ? pattern : erased_page();

  SweepResult result;
  if (options.aggregate_page) {
    result.aggregate = blank_signature(options.block, *options.aggregate_page, options.iterations_per_page,
                                       options.pattern, Technique::MultiPageSweep);
  }

  PageData observed;
  for (std::uint32_t aggressor = options.first_page; aggressor <= options.last_page; ++aggressor) {
    struct Watched {
      std::uint32_t page;
      Signature sig;
    };
    std::vector<Watched> watched;
    if (aggressor > 0) watched.push_back({aggressor - 1, {}});
    watched.push_back({aggressor, {}});
    if (aggressor + 1 < kPagesPerBlock) watched.push_back({aggressor + 1, {}});

    std::vector<FirstFlipTracker> trackers;
    trackers.reserve(watched.size());
    for (Watched& w : watched) {
      w.sig = blank_signature(options.block, w.page, options.iterations_per_page, options.pattern,
                              Technique::MultiPageSweep);
      trackers.emplace_back(w.sig, w.page == aggressor ? pattern : neighbour_expected);
    }

    require_ok(dev.erase_block(options.block), "erase");
    if (options.pre_program_all) program_whole_block(dev, options.block, pattern);
    for (std::uint32_t cycle = 1; cycle <= options.iterations_per_page; ++cycle) {
      require_ok(dev.program_page(options.block, aggressor, pattern), "program");
      for (std::size_t i = 0; i < watched.size(); ++i) {
        dev.read_page(options.block, watched[i].page, observed);
        trackers[i].observe(observed, cycle, nullptr);
      }
    }

    SummaryRecord row;
    row.aggressor_page = aggressor;
    for (const Watched& w : watched) {
      const std::uint32_t first = w.sig.first_flip();
      if (w.page == aggressor) {
        row.self = first;
      } else if (w.page < aggressor) {
        row.pred = first;
      } else {
        row.succ = first;
      }
      if (result.aggregate && w.page == result.aggregate->page) {
        auto& agg = result.aggregate->bits;
        for (std::size_t i = 0; i < agg.size(); ++i) agg[i] = std::min(agg[i], w.sig.bits[i]);
      }
    }
    result.rows.push_back(row);
    if (trace) trace->append(row);
  }
  return result;
}

PageData experiment_page_data(std::uint64_t experiment_seed, std::uint32_t block, std::uint32_t page) {
  rng::KeyedStream stream(
      rng::hash_key({experiment_seed, static_cast<std::uint64_t>(rng::Stream::ExperimentData), block, page}));
  PageData data;
  for (std::size_t i = 0; i < kPageBytes; i += 8) {
    const std::uint64_t word = stream();
    for (std::size_t j = 0; j < 8 && i + j < kPageBytes; ++j) data[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
  }
  return data;
}

std::vector<Signature> extract_read_disturb(FlashDevice& dev, const ExperimentConfig& cfg, TraceLog* trace) {
  require_technique(cfg, Technique::ReadDisturb);
  const std::uint32_t interval = cfg.resolved_check_interval();

  std::vector<Signature> sigs;
  std::vector<PageData> images;
  sigs.reserve(kPagesPerBlock);
  images.reserve(kPagesPerBlock);
  for (std::uint32_t p = 0; p < kPagesPerBlock; ++p) {
    sigs.push_back(blank_signature(cfg.block, p, cfg.iterations, 0x00, Technique::ReadDisturb));
    images.push_back(experiment_page_data(cfg.experiment_seed, cfg.block, p));
  }
  std::vector<FirstFlipTracker> trackers;
  trackers.reserve(kPagesPerBlock);
  for (std::uint32_t p = 0; p < kPagesPerBlock; ++p) trackers.emplace_back(sigs[p], images[p]);

  require_ok(dev.erase_block(cfg.block), "erase");
  for (std::uint32_t p = 0; p < kPagesPerBlock; ++p) require_ok(dev.program_page(cfg.block, p, images[p]), "program");

  PageData observed;
  std::uint32_t reads = 0;
  while (cfg.iterations - reads >= interval) {
    dev.read_page_repeated(cfg.block, cfg.target_page, interval, observed);
    reads += interval;
    for (std::uint32_t p = 0; p < kPagesPerBlock; ++p) {
      dev.read_page(cfg.block, p, observed);
      trackers[p].observe(observed, reads, trace);
    }
  }
  // Reads past the last whole interval are performed but never checked.
  if (reads < cfg.iterations) dev.read_page_repeated(cfg.block, cfg.target_page, cfg.iterations - reads, observed);
  return sigs;
}

std::vector<double> extract_program_latency(FlashDevice& dev, std::uint32_t block, std::uint32_t page,
                                            TraceLog* trace) {
  if (block >= dev.blocks() || page >= kPagesPerBlock) throw ConfigError("latency target out of range");
  PageData observed;
  dev.read_page(block, page, observed);
  if (observed != erased_page()) throw ConfigError("program latency extraction needs an erased page");

  std::vector<double> latencies(kPageBytes);
  PageData data = erased_page();
  for (std::uint32_t byte = 0; byte < kPageBytes; ++byte) {
    data[byte] = 0x00;
    latencies[byte] = dev.program_latency(block, page, data);
    data[byte] = 0xFF;
    if (trace) trace->append(LatencyRecord{byte + 1u, block, page, byte, latencies[byte]});
  }
  return latencies;
}

}  // namespace flashpuf
