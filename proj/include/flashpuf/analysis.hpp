// Signature analysis: correlation, Hamming distance, exponential first-flip
// fits and heatmap classification.

#pragma once

#include "flashpuf/extraction.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace flashpuf {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Correlation is undefined when a vector has zero variance.
class UndefinedCorrelation : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

/// Sample Pearson coefficient, clamped to [-1, 1].
double pearson(std::span<const double> x, std::span<const double> y);

/// First-flip cycles as doubles; kNever maps to total_cycles + 1.
std::vector<double> signature_values(const Signature& sig);

/// Pearson over two signatures after the sentinel mapping.
double pearson(const Signature& a, const Signature& b);

double fractional_hamming(const StableBitMap& a, const StableBitMap& b);

/// Authentication threshold on fractional Hamming distance of stable maps.
inline constexpr double kMatchThreshold = 0.15;
inline bool signatures_match(const StableBitMap& a, const StableBitMap& b) {
  return fractional_hamming(a, b) < kMatchThreshold;
}

/// Bitwise AND of stability over passes.
StableBitMap stable_bits_across_passes(std::span<const StableBitMap> maps);

struct CurveFit {
  double scale = 1.0;     // a
  double rate = 0.0;      // b
  double residual = 0.0;  // RMS of ln(cycles) residuals
};

/// Least squares of ln(cycles) on page index: a = exp(intercept), b = slope.
CurveFit fit_exponential(std::span<const std::pair<double, double>> points);

/// round(a * exp(b * page)).
double predict_first_flip(const CurveFit& fit, double page);

// ---------------------------------------------------------------------------
// Heatmap

/// Class ordinal per bit: 0 = Stable (never flipped); 1 + bucket for a
/// flipped bit, where bucket j counts how many edges are <= the cycle.
/// With k edges there are k + 1 flipped buckets.
struct HeatmapGrid {
  std::vector<double> bucket_edges;
  std::vector<std::uint8_t> cells;  // kPageBytes rows x 8 columns, row-major

  static constexpr std::size_t kRows = kPageBytes;
  static constexpr std::size_t kCols = 8;
  static constexpr std::uint8_t kStable = 0;

  std::uint8_t at(std::size_t byte, std::size_t bit) const { return cells[byte * kCols + bit]; }
  std::size_t flipped_classes() const { return bucket_edges.size() + 1; }
  std::size_t stable_count() const;
  /// Rows whose eight bits all flipped.
  std::size_t fully_flipped_rows() const;
  /// Rows whose eight bits are all stable.
  std::size_t fully_stable_rows() const;
};

/// Eight log-spaced edges over [1, total_cycles]; a single edge at 1 when
/// total_cycles <= 1.
std::vector<double> default_bucket_edges(std::uint32_t total_cycles);

HeatmapGrid heatmap(const Signature& sig, std::span<const double> bucket_edges);

}  // namespace flashpuf
