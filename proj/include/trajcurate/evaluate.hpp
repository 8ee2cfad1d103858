#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "trajcurate/mask.hpp"
#include "trajcurate/synthgen.hpp"

namespace trajcurate::synth {

struct Metrics {
  std::size_t total_frames = 0;
  std::size_t anomaly_frames = 0;
  double anomaly_fraction = 0.0;

  // Frames the mask drops as suboptimal, against anomaly frames.
  std::size_t subopt_dropped = 0;
  double subopt_precision = 1.0;
  bool subopt_precision_defined = false;  // false: nothing dropped, 1.0 by convention
  double subopt_recall = 0.0;
  bool subopt_recall_defined = false;
  double false_positive_rate = 0.0;  // dropped clean frames / clean frames
  std::map<AnomalyType, double> recall_by_type;

  // Score ranking: threshold at the ground-truth anomaly fraction.
  double gt_fraction_threshold = 0.0;
  double gt_fraction_achieved = 0.0;
  std::map<AnomalyType, double> recall_at_gt_fraction;
  double auroc = 0.5;
  bool auroc_defined = false;

  // Chunk-level duplicate drops against planted groups; a group of m members
  // accounts for at most m - 1 true drops.
  std::size_t planted_duplicates = 0;
  std::size_t dup_dropped_chunks = 0;
  std::size_t dup_true_positives = 0;
  double dup_precision = 1.0;
  bool dup_precision_defined = false;
  double dup_recall = 0.0;
  bool dup_recall_defined = false;
};

/// Area under the ROC curve of `scores` for binary `labels` (ties count half).
/// Returns 0.5 when either class is empty.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

Metrics evaluate_masks(const curation::CurationMask& mask, const GroundTruth& gt);

/// JSON document with a format_version field.
std::string metrics_json(const Metrics& m);

}  // namespace trajcurate::synth
