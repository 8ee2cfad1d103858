#include "trajcurate/evaluate.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "trajcurate/calibrate.hpp"
#include "trajcurate/error.hpp"

namespace trajcurate::synth {

using nlohmann::json;

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error(Errc::ShapeMismatch, "scores and labels differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j + 1);  // 1-based average
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) {
        rank_sum += avg_rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) return 0.5;
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

namespace {

bool is_subopt(curation::Reason r) {
  return r == curation::Reason::Suboptimal || r == curation::Reason::Both;
}
bool is_dup(curation::Reason r) {
  return r == curation::Reason::Duplicate || r == curation::Reason::Both;
}
double ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}

}  // namespace

Metrics evaluate_masks(const curation::CurationMask& mask, const GroundTruth& gt) {
  if (mask.trajectories.size() != gt.traj_ids.size())
    throw Error(Errc::ShapeMismatch, "mask and ground truth cover different trajectories");
  std::unordered_map<std::string, const curation::TrajectoryMask*> by_id;
  for (const auto& t : mask.trajectories) by_id[t.traj_id] = &t;

  Metrics m;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<AnomalyType> tags;
  std::map<AnomalyType, std::size_t> type_total, type_dropped;
  std::size_t clean = 0, clean_dropped = 0, tp = 0;

  for (std::size_t t = 0; t < gt.traj_ids.size(); ++t) {
    const auto it = by_id.find(gt.traj_ids[t]);
    if (it == by_id.end()) throw Error(Errc::ShapeMismatch, "no mask for " + gt.traj_ids[t]);
    const auto& tm = *it->second;
    const auto& tg = gt.tags[t];
    if (tm.size() != tg.size()) throw Error(Errc::ShapeMismatch, "frame count differs for " + tm.traj_id);
    for (std::size_t i = 0; i < tg.size(); ++i) {
      const bool anomalous = tg[i] != AnomalyType::Clean;
      const bool dropped = is_subopt(tm.reason[i]);
      scores.push_back(tm.subopt_score[i]);
      labels.push_back(anomalous ? 1 : 0);
      tags.push_back(tg[i]);
      m.subopt_dropped += dropped;
      if (anomalous) {
        ++m.anomaly_frames;
        ++type_total[tg[i]];
        type_dropped[tg[i]] += dropped;
        tp += dropped;
      } else {
        ++clean;
        clean_dropped += dropped;
      }
    }
  }
  m.total_frames = scores.size();
  m.anomaly_fraction = ratio(m.anomaly_frames, m.total_frames);
  m.subopt_precision_defined = m.subopt_dropped > 0;
  m.subopt_precision = m.subopt_precision_defined ? ratio(tp, m.subopt_dropped) : 1.0;
  m.subopt_recall_defined = m.anomaly_frames > 0;
  m.subopt_recall = ratio(tp, m.anomaly_frames);
  m.false_positive_rate = ratio(clean_dropped, clean);
  for (const auto& [type, n] : type_total) m.recall_by_type[type] = ratio(type_dropped[type], n);

  if (!scores.empty()) {
    const auto choice = calibrate::threshold_for_ratio(scores, m.anomaly_fraction);
    m.gt_fraction_threshold = choice.threshold;
    m.gt_fraction_achieved = choice.achieved;
    std::map<AnomalyType, std::size_t> hit;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (labels[i] && scores[i] > choice.threshold) ++hit[tags[i]];
    for (const auto& [type, n] : type_total) m.recall_at_gt_fraction[type] = ratio(hit[type], n);
  }
  m.auroc_defined = m.anomaly_frames > 0 && clean > 0;
  m.auroc = auroc(scores, labels);

  // Duplicates, evaluated on the ground-truth chunk grid.
  const std::size_t W = gt.chunk_frames;
  std::unordered_map<std::uint32_t, std::pair<std::size_t, std::size_t>> group_stats;  // size, dropped
  for (const auto& g : gt.groups) group_stats[g.id] = {g.members.size(), 0};
  for (std::size_t t = 0; t < gt.traj_ids.size(); ++t) {
    const auto& tm = *by_id.at(gt.traj_ids[t]);
    for (std::size_t slot = 0; slot < gt.chunk_groups[t].size(); ++slot) {
      bool dropped = false;
      for (std::size_t i = slot * W; i < (slot + 1) * W && !dropped; ++i) dropped = is_dup(tm.reason[i]);
      if (!dropped) continue;
      ++m.dup_dropped_chunks;
      const auto g = gt.chunk_groups[t][slot];
      if (g != 0) ++group_stats[g].second;
    }
  }
  for (const auto& [id, st] : group_stats) {
    m.planted_duplicates += st.first - 1;
    m.dup_true_positives += std::min(st.second, st.first - 1);
  }
  m.dup_precision_defined = m.dup_dropped_chunks > 0;
  m.dup_precision = m.dup_precision_defined ? ratio(m.dup_true_positives, m.dup_dropped_chunks) : 1.0;
  m.dup_recall_defined = m.planted_duplicates > 0;
  m.dup_recall = ratio(m.dup_true_positives, m.planted_duplicates);
  return m;
}

std::string metrics_json(const Metrics& m) {
  auto by_type = [](const std::map<AnomalyType, double>& v) {
    json j = json::object();
    for (const auto& [type, r] : v) j[std::string(anomaly_name(type))] = r;
    return j;
  };
  json j;
  j["format_version"] = 1;
  j["total_frames"] = m.total_frames;
  j["anomaly_frames"] = m.anomaly_frames;
  j["anomaly_fraction"] = m.anomaly_fraction;
  j["suboptimal"] = {
      {"dropped_frames", m.subopt_dropped},
      {"precision", m.subopt_precision},
      {"precision_defined", m.subopt_precision_defined},
      {"recall", m.subopt_recall},
      {"recall_defined", m.subopt_recall_defined},
      {"false_positive_rate", m.false_positive_rate},
      {"recall_by_type", by_type(m.recall_by_type)},
      {"auroc", m.auroc},
      {"auroc_defined", m.auroc_defined},
      {"gt_fraction_threshold", m.gt_fraction_threshold},
      {"gt_fraction_achieved", m.gt_fraction_achieved},
      {"recall_at_gt_fraction", by_type(m.recall_at_gt_fraction)},
  };
  j["duplicates"] = {
      {"planted", m.planted_duplicates},
      {"dropped_chunks", m.dup_dropped_chunks},
      {"true_positives", m.dup_true_positives},
      {"precision", m.dup_precision},
      {"precision_defined", m.dup_precision_defined},
      {"recall", m.dup_recall},
      {"recall_defined", m.dup_recall_defined},
  };
  return j.dump(2);
}

}  // namespace trajcurate::synth
