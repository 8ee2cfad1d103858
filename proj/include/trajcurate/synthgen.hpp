#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajcurate/trajstore.hpp"

namespace trajcurate::synth {

enum class AnomalyType : std::uint8_t { Clean = 0, Pause, Slow, BackAndForth, FailureRetry };

inline constexpr std::array<AnomalyType, 4> kAnomalyTypes{
    AnomalyType::Pause, AnomalyType::Slow, AnomalyType::BackAndForth, AnomalyType::FailureRetry};

std::string_view anomaly_name(AnomalyType t);
AnomalyType parse_anomaly(std::string_view s);

struct SynthConfig {
  std::size_t num_traj = 200;
  std::size_t frames_per_traj = 300;
  double fps = 10.0;
  std::size_t obs_dim = 32;
  std::size_t action_dim = 2;
  /// Fraction of trajectories carrying each anomaly; at most one per trajectory.
  std::map<AnomalyType, double> anomaly_rates{{AnomalyType::Pause, 0.05},
                                              {AnomalyType::Slow, 0.05},
                                              {AnomalyType::BackAndForth, 0.05},
                                              {AnomalyType::FailureRetry, 0.05}};
  /// Fraction of chunks copied into another trajectory.
  double duplicate_rate = 0.02;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
  /// Duplicate copies are aligned to this chunk length.
  double chunk_seconds = 2.0;

  // Latent layout: [phase_scale * (phi - 0.5), harmonic_scale * (cos, sin)(2 pi k phi)
  // for k = 1..harmonics, position (2), per-trajectory context (context_dim)].
  std::size_t harmonics = 4;
  std::size_t context_dim = 16;
  double phase_scale = 6.0;
  double harmonic_scale = 1.0;
  double context_scale = 0.25;
  double position_span = 1.0;

  std::size_t latent_dim() const { return 1 + 2 * harmonics + 2 + context_dim; }
  void validate() const;
};

/// One injected segment, in frames.
struct AnomalySegment {
  AnomalyType type = AnomalyType::Clean;
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t period = 0;  // back_and_forth oscillation period; 0 means one second
};

/// Pre-noise latent state of one trajectory.
struct LatentTrack {
  std::vector<double> phase;
  std::vector<AnomalyType> tags;
  /// 0 before a failure, ramping to 1 across the failure; shifts the context.
  std::vector<double> context_blend;
};

/// Phase dynamics: clean phase advances by 1 / frames per frame. A pause
/// freezes it, slow halves the rate, back_and_forth oscillates around the
/// entry value and returns to it after whole periods, failure_retry
/// falls by 0.2 across the segment and then resumes at the normal rate.
LatentTrack simulate_track(std::size_t frames, double fps,
                           const std::optional<AnomalySegment>& segment);

struct DuplicateMember {
  std::string traj_id;
  std::size_t start = 0;
  std::size_t span = 0;

  friend bool operator==(const DuplicateMember&, const DuplicateMember&) = default;
};

struct DuplicateGroup {
  std::uint32_t id = 0;  // 1-based
  std::vector<DuplicateMember> members;

  friend bool operator==(const DuplicateGroup&, const DuplicateGroup&) = default;
};

struct SelfCheck {
  double min_duplicate_similarity = 1.0;
  double max_cross_phase_similarity = -1.0;
  std::size_t cross_phase_pairs = 0;

  friend bool operator==(const SelfCheck&, const SelfCheck&) = default;
};

struct GroundTruth {
  std::vector<std::string> traj_ids;
  std::vector<std::vector<AnomalyType>> tags;         // per trajectory, per frame
  std::size_t chunk_frames = 0;
  std::vector<std::vector<std::uint32_t>> chunk_groups;  // per trajectory, per chunk slot; 0 = unique
  std::vector<DuplicateGroup> groups;
  SelfCheck self_check;

  // Latent state, kept in memory only.
  std::vector<std::vector<double>> phase;
  std::vector<std::vector<std::array<double, 2>>> position;

  std::size_t total_frames() const;
  std::size_t count(AnomalyType t) const;
};

struct Synthetic {
  store::Dataset dataset;
  GroundTruth truth;
};

/// Deterministic in cfg.seed; `threads` only changes speed.
Synthetic generate(const SynthConfig& cfg, int threads = 1);

/// Chunk-embedding similarities of planted duplicates and of chunk pairs whose
/// mean phases differ by at least min_phase_gap.
SelfCheck run_self_check(const store::Dataset& ds, const GroundTruth& gt, std::uint64_t seed,
                         double min_phase_gap = 0.25, std::size_t max_pairs = 4000);

/// Dataset (with per-frame labels) plus `<root>/duplicates.json`.
void save_synthetic(const Synthetic& synth, const std::filesystem::path& root);

/// Rebuilds tags and duplicate groups from a saved synthetic dataset.
GroundTruth load_ground_truth(const std::filesystem::path& root);

}  // namespace trajcurate::synth
