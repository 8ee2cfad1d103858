#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trajcurate/dedup.hpp"
#include "trajcurate/mask.hpp"
#include "trajcurate/subopt.hpp"
#include "trajcurate/trajstore.hpp"

namespace trajcurate::calibrate {

enum class Method { Suboptimal, Dedup };

struct RatioPoint {
  double threshold = 0.0;
  double ratio = 0.0;
};

struct RatioCurve {
  Method method = Method::Suboptimal;
  std::vector<RatioPoint> points;

  /// Non-increasing ratio as the threshold grows.
  bool monotone() const;
};

struct ThresholdChoice {
  double target = 0.0;
  double threshold = 0.0;
  double achieved = 0.0;
};

/// ratio(theta) = #{score > theta} / #scores. Frames that can never be dropped
/// should be passed as -inf.
RatioCurve ratio_curve(std::span<const double> scores, std::span<const double> thresholds);

/// Exact order-statistic inverse of ratio_curve: the achieved ratio is the
/// largest attainable value not above target (ties drop together).
ThresholdChoice threshold_for_ratio(std::span<const double> scores, double target);

/// Frame-level dedup deletion ratio per threshold, re-running the keep-one
/// rule each time. total_frames is the denominator.
RatioCurve dedup_ratio_curve(const dedup::DuplicateIndex& index,
                             const std::vector<dedup::Chunk>& chunks, std::size_t total_frames,
                             std::span<const double> thresholds, bool drop_all_over_threshold = false);

/// Smallest in-cluster similarity threshold whose keep-one deletion ratio does
/// not exceed target.
ThresholdChoice dedup_threshold_for_ratio(const dedup::DuplicateIndex& index,
                                          const std::vector<dedup::Chunk>& chunks,
                                          std::size_t total_frames, double target,
                                          bool drop_all_over_threshold = false);

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Element-wise union of two drop sets.
curation::FrameFlags union_flags(const curation::FrameFlags& a, const curation::FrameFlags& b);

/// Drop = union, with the reason recording which method(s) fired. Scores are
/// left at their neutral values (0 and -1).
curation::CurationMask combine_masks(std::span<const std::string> traj_ids,
                                     const curation::FrameFlags& subopt,
                                     const curation::FrameFlags& dup);

/// combine_masks plus per-frame scores from whichever results are present.
curation::CurationMask build_mask(const store::Dataset& ds, const subopt::SuboptResult* subopt,
                                  const dedup::DedupResult* dedup);

}  // namespace trajcurate::calibrate
