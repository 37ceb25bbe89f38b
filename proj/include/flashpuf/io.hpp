// On-disk formats for signatures, stable-bit maps and heatmaps.
//
// signature.bin  "FSIG1", u8 technique, u32 block, u32 page,
//                u32 total_cycles, u8 pattern, then 16,896 u32 first-flip
//                values (0xFFFFFFFF = never). All integers little-endian.
// stable.bin     "FSTB1", u32 block, u32 page, u32 after_cycles, then 2,112
//                bytes; bit i of the map is bit (i % 8) of byte (i / 8).
// heatmap CSV    one row per byte: "<byte>,<c0>,...,<c7>", no header; cN is
//                the class ordinal of bit N (0 = stable).
// heatmap SVG    one rect per bit; stable bits white, flipped buckets on a
//                black -> purple -> orange -> pale-yellow ramp (earliest
//                flips darkest).

#pragma once

#include "flashpuf/analysis.hpp"
#include "flashpuf/extraction.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace flashpuf {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_signature(std::ostream& out, const Signature& sig);
Signature read_signature(std::istream& in);
void save_signature(const std::filesystem::path& path, const Signature& sig);
Signature load_signature(const std::filesystem::path& path);

void write_stable_map(std::ostream& out, const StableBitMap& map);
StableBitMap read_stable_map(std::istream& in);
void save_stable_map(const std::filesystem::path& path, const StableBitMap& map);
StableBitMap load_stable_map(const std::filesystem::path& path);

void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid);
void write_heatmap_svg(std::ostream& out, const HeatmapGrid& grid);

/// "#rrggbb" for a class ordinal of a grid with `flipped_classes` buckets.
std::string heatmap_color(std::uint8_t ordinal, std::size_t flipped_classes);

}  // namespace flashpuf
