// Flat key=value experiment configs and run manifests.
//
// One "key = value" per line; blank lines and text after '#' are ignored.
// Keys may appear at most once; unknown keys are rejected. See README for
// the full key list. A manifest is a config with every key written out plus
// tool_version and output.* entries, so it can be read back as a config.

#pragma once

#include "flashpuf/extraction.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace flashpuf {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Throws ConfigError naming the offending line.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key in a fixed order; optional keys only when set. Parsing the
/// output yields an equal config.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

struct RunOutputs {
  std::string manifest = "manifest.txt";
  std::string trace = "trace.log";
  std::string signature = "signature.bin";
  std::string stable = "stable.bin";
  std::string heatmap = "heatmap.svg";
};

void write_manifest(std::ostream& out, const ExperimentConfig& cfg, const RunOutputs& outputs = {});

}  // namespace flashpuf
