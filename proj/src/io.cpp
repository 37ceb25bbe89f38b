#include "flashpuf/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace flashpuf {

namespace {

constexpr char kSignatureMagic[5] = {'F', 'S', 'I', 'G', '1'};
constexpr char kStableMagic[5] = {'F', 'S', 'T', 'B', '1'};

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw FormatError("file truncated");
  return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("file truncated");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
  char got[5];
  in.read(got, 5);
  if (!in || std::memcmp(got, magic, 5) != 0) throw FormatError(std::string("not a ") + what + " file");
}

void expect_end(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_signature(std::ostream& out, const Signature& sig) {
  if (sig.bits.size() != kPageBits) throw FormatError("signature does not cover one page");
  out.write(kSignatureMagic, 5);
  put_u8(out, static_cast<std::uint8_t>(sig.technique));
  put_u32(out, sig.block);
  put_u32(out, sig.page);
  put_u32(out, sig.total_cycles);
  put_u8(out, sig.pattern);
  for (std::uint32_t v : sig.bits) put_u32(out, v);
  if (!out) throw FormatError("signature write failed");
}

Signature read_signature(std::istream& in) {
  expect_magic(in, kSignatureMagic, "signature");
  Signature sig;
  const std::uint8_t technique = get_u8(in);
  if (technique > static_cast<std::uint8_t>(Technique::ProgramLatency)) throw FormatError("unknown technique");
  sig.technique = static_cast<Technique>(technique);
  sig.block = get_u32(in);
  sig.page = get_u32(in);
  sig.total_cycles = get_u32(in);
  sig.pattern = get_u8(in);
  for (auto& v : sig.bits) v = get_u32(in);
  expect_end(in);
  return sig;
}

void save_signature(const std::filesystem::path& path, const Signature& sig) {
  auto out = open_out(path);
  write_signature(out, sig);
}

Signature load_signature(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_signature(in);
}

void write_stable_map(std::ostream& out, const StableBitMap& map) {
  out.write(kStableMagic, 5);
  put_u32(out, map.block);
  put_u32(out, map.page);
  put_u32(out, map.after_cycles);
  for (std::size_t byte = 0; byte < kPageBytes; ++byte) {
    std::uint8_t v = 0;
    for (unsigned bit = 0; bit < 8; ++bit) v |= static_cast<std::uint8_t>(map.stable[byte * 8 + bit]) << bit;
    put_u8(out, v);
  }
  if (!out) throw FormatError("stable map write failed");
}

StableBitMap read_stable_map(std::istream& in) {
  expect_magic(in, kStableMagic, "stable-bit map");
  StableBitMap map;
  map.block = get_u32(in);
  map.page = get_u32(in);
  map.after_cycles = get_u32(in);
  for (std::size_t byte = 0; byte < kPageBytes; ++byte) {
    const std::uint8_t v = get_u8(in);
    for (unsigned bit = 0; bit < 8; ++bit) map.stable[byte * 8 + bit] = (v >> bit) & 1u;
  }
  expect_end(in);
  return map;
}

void save_stable_map(const std::filesystem::path& path, const StableBitMap& map) {
  auto out = open_out(path);
  write_stable_map(out, map);
}

StableBitMap load_stable_map(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_stable_map(in);
}

void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid) {
  for (std::size_t r = 0; r < HeatmapGrid::kRows; ++r) {
    out << r;
    for (std::size_t c = 0; c < HeatmapGrid::kCols; ++c) out << ',' << static_cast<unsigned>(grid.at(r, c));
    out << '\n';
  }
}

std::string heatmap_color(std::uint8_t ordinal, std::size_t flipped_classes) {
  if (ordinal == HeatmapGrid::kStable) return "#ffffff";
  // Anchors sampled from a perceptually ordered dark-to-warm ramp.
  static constexpr std::array<std::array<double, 3>, 6> kRamp = {{
      {0, 0, 4}, {66, 10, 104}, {147, 38, 103}, {221, 81, 58}, {252, 165, 10}, {252, 255, 164}}};
  const double t = flipped_classes <= 1 ? 0.0
                                         : static_cast<double>(ordinal - 1) / static_cast<double>(flipped_classes - 1);
  const double pos = std::clamp(t, 0.0, 1.0) * (kRamp.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, kRamp.size() - 1);
  const double f = pos - static_cast<double>(lo);
  char buf[8];
  int rgb[3];
  for (int i = 0; i < 3; ++i) rgb[i] = static_cast<int>(std::lround(kRamp[lo][i] + f * (kRamp[hi][i] - kRamp[lo][i])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

void write_heatmap_svg(std::ostream& out, const HeatmapGrid& grid) {
  constexpr int kCellW = 12;
  constexpr int kCellH = 3;
  const int width = static_cast<int>(HeatmapGrid::kCols) * kCellW;
  const int height = static_cast<int>(HeatmapGrid::kRows) * kCellH;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t r = 0; r < HeatmapGrid::kRows; ++r) {
    for (std::size_t c = 0; c < HeatmapGrid::kCols; ++c) {
      out << "<rect x=\"" << c * kCellW << "\" y=\"" << r * kCellH << "\" width=\"" << kCellW << "\" height=\""
          << kCellH << "\" fill=\"" << heatmap_color(grid.at(r, c), grid.flipped_classes()) << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace flashpuf
