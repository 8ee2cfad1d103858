#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajcurate/dedup.hpp"
#include "trajcurate/progress.hpp"
#include "trajcurate/subopt.hpp"
#include "trajcurate/synthgen.hpp"

namespace trajcurate::config {

/// Everything a CLI run needs. Parsed from one JSON file; every field has a
/// default and unknown keys are rejected. See docs/config.md.
struct PipelineConfig {
  std::string data;
  std::string out;
  std::string model;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<double> targets{0.10, 0.20, 0.30};

  progress::TemporalBins bins;
  subopt::SuboptConfig subopt;
  dedup::DedupConfig dedup;
  std::optional<std::string> embeddings;
  progress::ProgressTrainConfig train;
  synth::SynthConfig synth;

  /// Copies `seed` into every seeded sub-config.
  void apply_seed();
  /// Throws Error(InvalidConfig) on any out-of-range field.
  void validate() const;
};

PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Resolved configuration as JSON (paths included).
std::string to_json(const PipelineConfig& cfg);

/// Accepts a number or "inf", "+inf", "-inf".
double parse_threshold(std::string_view text);

}  // namespace trajcurate::config
