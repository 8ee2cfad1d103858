#include "trajcurate/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "trajcurate/error.hpp"

namespace trajcurate::calibrate {

bool RatioCurve::monotone() const {
  auto sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.threshold < b.threshold; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].ratio > sorted[i - 1].ratio) return false;
  return true;
}

RatioCurve ratio_curve(std::span<const double> scores, std::span<const double> thresholds) {
  if (scores.empty()) throw Error(Errc::EmptyScores, "ratio_curve");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  RatioCurve curve{Method::Suboptimal, {}};
  for (double th : thresholds) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), th);
    curve.points.push_back({th, static_cast<double>(above) / static_cast<double>(sorted.size())});
  }
  return curve;
}

ThresholdChoice threshold_for_ratio(std::span<const double> scores, double target) {
  if (scores.empty()) throw Error(Errc::EmptyScores, "threshold_for_ratio");
  if (!(target >= 0.0 && target <= 1.0)) throw Error(Errc::InvalidConfig, "target ratio outside [0, 1]");
  std::vector<double> desc(scores.begin(), scores.end());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const std::size_t n = desc.size();
  const auto droppable = static_cast<std::size_t>(
      std::count_if(desc.begin(), desc.end(), [](double s) { return s > -std::numeric_limits<double>::infinity(); }));
  auto budget = static_cast<std::size_t>(std::floor(target * static_cast<double>(n) + 1e-9));
  budget = std::min(budget, droppable);

  // Dropping the top m is possible only where the order statistics break.
  std::size_t m = budget;
  while (m > 0 && m < n && !(desc[m - 1] > desc[m])) --m;

  ThresholdChoice c;
  c.target = target;
  if (m == n)
    c.threshold = std::nextafter(desc[n - 1], -std::numeric_limits<double>::infinity());
  else
    c.threshold = desc[m];
  c.achieved = static_cast<double>(m) / static_cast<double>(n);
  return c;
}

namespace {

double dedup_ratio_at(const dedup::DuplicateIndex& index, const std::vector<dedup::Chunk>& chunks,
                      std::size_t total_frames, double eps, bool drop_all) {
  const auto drop = index.chunk_drops(eps, drop_all);
  std::size_t frames = 0;
  for (std::size_t c = 0; c < chunks.size(); ++c)
    if (drop[c]) frames += chunks[c].span_frames;
  return total_frames == 0 ? 0.0 : static_cast<double>(frames) / static_cast<double>(total_frames);
}

}  // namespace

RatioCurve dedup_ratio_curve(const dedup::DuplicateIndex& index,
                             const std::vector<dedup::Chunk>& chunks, std::size_t total_frames,
                             std::span<const double> thresholds, bool drop_all) {
  RatioCurve curve{Method::Dedup, {}};
  for (double th : thresholds)
    curve.points.push_back({th, dedup_ratio_at(index, chunks, total_frames, th, drop_all)});
  return curve;
}

ThresholdChoice dedup_threshold_for_ratio(const dedup::DuplicateIndex& index,
                                          const std::vector<dedup::Chunk>& chunks,
                                          std::size_t total_frames, double target, bool drop_all) {
  if (chunks.empty()) throw Error(Errc::EmptyScores, "no chunks to calibrate");
  if (!(target >= 0.0 && target <= 1.0)) throw Error(Errc::InvalidConfig, "target ratio outside [0, 1]");
  // The drop set only changes at observed similarity values.
  std::vector<double> cand = index.pair_similarities();
  if (cand.empty()) return {target, 1.0, 0.0};
  cand.insert(cand.begin(), std::nextafter(cand.front(), -std::numeric_limits<double>::infinity()));

  // Ratio is non-increasing in the threshold: binary search for the smallest
  // candidate whose ratio fits the budget.
  std::size_t lo = 0, hi = cand.size() - 1;  // ratio(cand.back()) == 0
  const double budget = target + 1e-12;
  if (dedup_ratio_at(index, chunks, total_frames, cand.front(), drop_all) <= budget) hi = 0;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (dedup_ratio_at(index, chunks, total_frames, cand[mid], drop_all) <= budget)
      hi = mid;
    else
      lo = mid + 1;
  }
  return {target, cand[hi], dedup_ratio_at(index, chunks, total_frames, cand[hi], drop_all)};
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

curation::FrameFlags union_flags(const curation::FrameFlags& a, const curation::FrameFlags& b) {
  if (a.size() != b.size()) throw Error(Errc::MaskShapeMismatch, "trajectory count differs");
  curation::FrameFlags out(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) throw Error(Errc::MaskShapeMismatch, "frame count differs");
    out[t].resize(a[t].size());
    for (std::size_t i = 0; i < a[t].size(); ++i) out[t][i] = (a[t][i] || b[t][i]) ? 1 : 0;
  }
  return out;
}

curation::CurationMask combine_masks(std::span<const std::string> ids,
                                     const curation::FrameFlags& subopt,
                                     const curation::FrameFlags& dup) {
  if (subopt.size() != ids.size() || dup.size() != ids.size())
    throw Error(Errc::MaskShapeMismatch, "trajectory count differs");
  curation::CurationMask mask;
  mask.trajectories.resize(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const std::size_t n = subopt[t].size();
    if (dup[t].size() != n) throw Error(Errc::MaskShapeMismatch, ids[t]);
    auto& tm = mask.trajectories[t];
    tm.traj_id = ids[t];
    tm.keep.resize(n);
    tm.reason.resize(n);
    tm.subopt_score.assign(n, 0.0);
    tm.dup_similarity.assign(n, curation::kUndefinedSimilarity);
    for (std::size_t i = 0; i < n; ++i) {
      const bool s = subopt[t][i] != 0, d = dup[t][i] != 0;
      tm.keep[i] = (s || d) ? 0 : 1;
      tm.reason[i] = s && d ? curation::Reason::Both
                     : s    ? curation::Reason::Suboptimal
                     : d    ? curation::Reason::Duplicate
                            : curation::Reason::None;
    }
  }
  return mask;
}

curation::CurationMask build_mask(const store::Dataset& ds, const subopt::SuboptResult* so,
                                  const dedup::DedupResult* dd) {
  std::vector<std::string> ids;
  curation::FrameFlags none;
  for (const auto& t : ds.trajectories) {
    ids.push_back(t.id);
    none.emplace_back(t.size(), 0);
  }
  auto mask = combine_masks(ids, so ? so->drop : none, dd ? dd->frame_drop : none);
  if (so)
    for (std::size_t t = 0; t < ids.size(); ++t)
      mask.trajectories[t].subopt_score = so->series[t].final_scores;
  if (dd)
    for (std::size_t c = 0; c < dd->chunks.size(); ++c) {
      const auto& ch = dd->chunks[c];
      const double s = dd->scores[c] <= dedup::kSingletonSimilarity ? curation::kUndefinedSimilarity
                                                                     : dd->scores[c];
      auto& sims = mask.trajectories[ch.traj_index].dup_similarity;
      std::fill(sims.begin() + static_cast<std::ptrdiff_t>(ch.start),
                sims.begin() + static_cast<std::ptrdiff_t>(ch.start + ch.span_frames), s);
    }
  return mask;
}

}  // namespace trajcurate::calibrate
