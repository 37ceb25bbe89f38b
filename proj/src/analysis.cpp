#include "flashpuf/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace flashpuf {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw AnalysisError("pearson: length mismatch");
  if (x.size() < 2) throw AnalysisError("pearson: need at least two samples");

  const auto n = static_cast<double>(x.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant input has no correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> signature_values(const Signature& sig) {
  std::vector<double> v(sig.bits.size());
  const double censored = static_cast<double>(sig.total_cycles) + 1.0;
  std::transform(sig.bits.begin(), sig.bits.end(), v.begin(),
                 [&](std::uint32_t c) { return c == kNever ? censored : static_cast<double>(c); });
  return v;
}

double pearson(const Signature& a, const Signature& b) {
  const auto x = signature_values(a);
  const auto y = signature_values(b);
  return pearson(x, y);
}

double fractional_hamming(const StableBitMap& a, const StableBitMap& b) {
  // Both maps always span one full page.
  return static_cast<double>((a.stable ^ b.stable).count()) / static_cast<double>(kPageBits);
}

StableBitMap stable_bits_across_passes(std::span<const StableBitMap> maps) {
  if (maps.empty()) throw AnalysisError("stable_bits_across_passes: no passes");
  StableBitMap out = maps.front();
  for (const auto& m : maps.subspan(1)) {
    if (m.block != out.block || m.page != out.page) {
      throw AnalysisError("stable_bits_across_passes: maps describe different pages");
    }
    out.stable &= m.stable;
    out.after_cycles = std::max(out.after_cycles, m.after_cycles);
  }
  return out;
}

CurveFit fit_exponential(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw AnalysisError("fit_exponential: need at least two points");
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& [page, cycles] : points) {
    if (!(cycles > 0.0) || !std::isfinite(cycles)) throw AnalysisError("fit_exponential: cycles must be positive");
    mean_x += page;
    mean_y += std::log(cycles);
  }
  const auto n = static_cast<double>(points.size());
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [page, cycles] : points) {
    sxx += (page - mean_x) * (page - mean_x);
    sxy += (page - mean_x) * (std::log(cycles) - mean_y);
  }
  if (sxx == 0.0) throw AnalysisError("fit_exponential: page indices must not all coincide");

  CurveFit fit;
  fit.rate = sxy / sxx;
  const double intercept = mean_y - fit.rate * mean_x;
  fit.scale = std::exp(intercept);

  double ss = 0.0;
  for (const auto& [page, cycles] : points) {
    const double r = std::log(cycles) - (intercept + fit.rate * page);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

double predict_first_flip(const CurveFit& fit, double page) {
  return std::round(fit.scale * std::exp(fit.rate * page));
}

std::size_t HeatmapGrid::stable_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), kStable));
}

std::size_t HeatmapGrid::fully_flipped_rows() const {
  std::size_t rows = 0;
  for (std::size_t r = 0; r < kRows; ++r) {
    bool all = true;
    for (std::size_t c = 0; c < kCols && all; ++c) all = at(r, c) != kStable;
    rows += all ? 1 : 0;
  }
  return rows;
}

std::size_t HeatmapGrid::fully_stable_rows() const {
  std::size_t rows = 0;
  for (std::size_t r = 0; r < kRows; ++r) {
    bool all = true;
    for (std::size_t c = 0; c < kCols && all; ++c) all = at(r, c) == kStable;
    rows += all ? 1 : 0;
  }
  return rows;
}

std::vector<double> default_bucket_edges(std::uint32_t total_cycles) {
  if (total_cycles <= 1) return {1.0};
  constexpr int kEdges = 8;
  std::vector<double> edges(kEdges);
  const double top = std::log(static_cast<double>(total_cycles));
  for (int i = 0; i < kEdges; ++i) edges[i] = std::exp(top * i / (kEdges - 1));
  edges.front() = 1.0;
  edges.back() = static_cast<double>(total_cycles);
  return edges;
}

HeatmapGrid heatmap(const Signature& sig, std::span<const double> bucket_edges) {
  if (bucket_edges.empty()) throw AnalysisError("heatmap: need at least one bucket edge");
  for (std::size_t i = 1; i < bucket_edges.size(); ++i) {
    if (!(bucket_edges[i] > bucket_edges[i - 1])) throw AnalysisError("heatmap: bucket edges must be strictly increasing");
  }
  if (bucket_edges.size() > 254) throw AnalysisError("heatmap: too many buckets");
  if (sig.bits.size() != kPageBits) throw AnalysisError("heatmap: signature does not cover one page");

  HeatmapGrid grid;
  grid.bucket_edges.assign(bucket_edges.begin(), bucket_edges.end());
  grid.cells.resize(kPageBits);
  for (std::size_t i = 0; i < kPageBits; ++i) {
    const std::uint32_t c = sig.bits[i];
    if (c == kNever) {
      grid.cells[i] = HeatmapGrid::kStable;
      continue;
    }
    const auto bucket = std::upper_bound(bucket_edges.begin(), bucket_edges.end(), static_cast<double>(c)) -
                        bucket_edges.begin();
    grid.cells[i] = static_cast<std::uint8_t>(1 + bucket);
  }
  return grid;
}

}  // namespace flashpuf
