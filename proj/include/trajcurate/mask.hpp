#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trajcurate::curation {

/// Per-trajectory, per-frame drop flags (1 = drop).
using FrameFlags = std::vector<std::vector<std::uint8_t>>;

enum class Reason : std::uint8_t { None = 0, Suboptimal = 1, Duplicate = 2, Both = 3 };

std::string_view reason_name(Reason r);
Reason parse_reason(std::string_view s);

inline constexpr double kUndefinedSimilarity = -1.0;

struct TrajectoryMask {
  std::string traj_id;
  std::vector<std::uint8_t> keep;
  std::vector<Reason> reason;
  std::vector<double> subopt_score;
  std::vector<double> dup_similarity;  // -1 where no chunk covers the frame

  std::size_t size() const { return keep.size(); }
  friend bool operator==(const TrajectoryMask&, const TrajectoryMask&) = default;
};

struct CurationMask {
  std::vector<TrajectoryMask> trajectories;

  std::size_t total_frames() const;
  std::size_t count(Reason r) const;
  std::size_t dropped() const;
  double deletion_ratio() const;
  /// Frames whose reason is Suboptimal or Both.
  double suboptimal_ratio() const;
  double duplicate_ratio() const;
  const TrajectoryMask* find(const std::string& id) const;

  friend bool operator==(const CurationMask&, const CurationMask&) = default;
};

/// Writes `<out>/masks/<id>.json`, one file per trajectory.
void write_masks(const CurationMask& mask, const std::filesystem::path& out_dir);

/// Reads every `*.json` under `dir/masks` (or `dir` itself when it has no
/// masks/ subdirectory), ordered by trajectory id.
CurationMask read_masks(const std::filesystem::path& dir);

}  // namespace trajcurate::curation
