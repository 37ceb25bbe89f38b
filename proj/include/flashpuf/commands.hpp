// Implementations behind the flashpuf subcommands. Each returns a process
// exit code and writes human output to `out`, diagnostics to `err`.

#pragma once

#include "flashpuf/analysis.hpp"
#include "flashpuf/config.hpp"
#include "flashpuf/extraction.hpp"
#include "flashpuf/trace.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace flashpuf {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kMismatch = 1;  // replay found differing outputs
inline constexpr int kUsage = 2;
inline constexpr int kDevice = 3;
}  // namespace exit_code

struct RunArtifacts {
  TraceLog trace;
  Signature signature;
  StableBitMap stable;
};

/// Runs the configured extraction on a fresh simulated chip. Throws
/// ConfigError for configs the technique cannot honour.
RunArtifacts execute_experiment(const ExperimentConfig& cfg);

/// Latency signature: every bit slot of byte i holds round(latency_i * 1000),
/// i.e. nanoseconds.
Signature latency_signature(std::span<const double> latencies_us, std::uint32_t block, std::uint32_t page);

/// Writes manifest, trace, signature, stable map and heatmap into `dir`.
void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunArtifacts& run);

struct FitReport {
  CurveFit intra;
  CurveFit pair;
  std::size_t intra_points = 0;
  std::size_t pair_points = 0;
};

/// Intra series: (aggressor, self) per SUMMARY; pair series: (aggressor,
/// first flip of page aggressor ^ 1). NEVER cells are skipped. Throws
/// AnalysisError with fewer than two summaries or two points per series.
FitReport fit_trace(const TraceLog& trace);

struct RunOptions {
  std::optional<std::uint64_t> chip_seed;
  std::optional<std::uint64_t> experiment_seed;
  bool quiet = false;
};

int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir, const RunOptions& options,
            std::ostream& out, std::ostream& err);
int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& out, std::ostream& err);
int cmd_fit(const std::filesystem::path& trace, std::ostream& out, std::ostream& err);
/// Output format is chosen by extension: .svg or .csv.
int cmd_plot(const std::filesystem::path& signature, std::span<const std::filesystem::path> outputs, std::ostream& out,
             std::ostream& err);
/// Re-runs the manifest in `run_dir` and checks every output byte for byte.
int cmd_replay(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

}  // namespace flashpuf
