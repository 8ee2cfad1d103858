#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "trajcurate/calibrate.hpp"
#include "trajcurate/error.hpp"
#include "trajcurate/mask.hpp"

namespace {

using namespace trajcurate;
using namespace trajcurate::calibrate;

constexpr double kInf = std::numeric_limits<double>::infinity();

double count_ratio(const std::vector<double>& s, double th) {
  return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double x) { return x > th; })) /
         static_cast<double>(s.size());
}

// Largest ratio <= target reachable by any threshold, by trying every
// distinct score and one value below all of them.
double best_reachable(const std::vector<double>& s, double target) {
  double best = 0.0;
  std::vector<double> cands;
  for (double x : s)
    if (std::isfinite(x)) cands.push_back(x);
  cands.push_back(*std::min_element(cands.begin(), cands.end()) - 1.0);
  for (double th : cands) {
    const double r = count_ratio(s, th);
    if (r <= target + 1e-12) best = std::max(best, r);
  }
  return best;
}

TEST(Calibrate, RatioCurveExamples) {
  const std::vector<double> s{0.1, 0.5, 0.9};
  const std::vector<double> th{0.0, 0.5, 1.0};
  const auto c = ratio_curve(s, th);
  EXPECT_EQ(c.points[0].ratio, 1.0);
  EXPECT_DOUBLE_EQ(c.points[1].ratio, 1.0 / 3.0);
  EXPECT_EQ(c.points[2].ratio, 0.0);
  EXPECT_TRUE(c.monotone());
  EXPECT_THROW(ratio_curve(std::vector<double>{}, th), Error);
}

TEST(Calibrate, ThresholdForRatioEdges) {
  const std::vector<double> s{0.3, -1.0, 2.5, 0.7};
  const auto zero = threshold_for_ratio(s, 0.0);
  EXPECT_EQ(zero.threshold, 2.5);
  EXPECT_EQ(zero.achieved, 0.0);
  const auto all = threshold_for_ratio(s, 1.0);
  EXPECT_LT(all.threshold, -1.0);
  EXPECT_EQ(all.threshold, std::nextafter(-1.0, -kInf));
  EXPECT_EQ(all.achieved, 1.0);
  EXPECT_EQ(count_ratio(s, all.threshold), 1.0);
  try {
    threshold_for_ratio(std::vector<double>{}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyScores);
  }
}

TEST(Calibrate, HundredDistinctScoresHitTargetExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100);
  for (auto& x : s) x = u(rng);
  for (double target : {0.1, 0.2, 0.3, 0.55}) {
    const auto c = threshold_for_ratio(s, target);
    EXPECT_NEAR(c.achieved, target, 1e-12);
    EXPECT_DOUBLE_EQ(count_ratio(s, c.threshold), c.achieved);
  }
}

TEST(Calibrate, TiesAndUndroppableFramesMatchBruteForce) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(0, 12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(37);
    for (auto& x : s) x = u(rng) * 0.25;
    for (std::size_t i = 0; i < s.size(); i += 5) s[i] = -kInf;
    for (double target = 0.0; target <= 1.0; target += 0.05) {
      const auto c = threshold_for_ratio(s, target);
      EXPECT_LE(c.achieved, target + 1e-12);
      EXPECT_DOUBLE_EQ(count_ratio(s, c.threshold), c.achieved);
      EXPECT_DOUBLE_EQ(c.achieved, best_reachable(s, target));
    }
  }
}

TEST(Calibrate, DedupCurveAndThreshold) {
  // Two clusters: a tight family of near-duplicates and scattered points.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t dim = 4, n = 40;
  std::vector<double> rows;
  std::vector<double> base{1, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    const double spread = i < 20 ? 0.05 * static_cast<double>(i) / 20.0 : 1.0;
    for (std::size_t k = 0; k < dim; ++k) v[k] = (i < 20 ? base[k] : 0.0) + spread * g(rng);
    double nn = 0.0;
    for (double x : v) nn += x * x;
    for (double& x : v) rows.push_back(x / std::sqrt(nn));
  }
  const auto model = dedup::kmeans({rows.data(), n, dim}, 2, 0);
  std::vector<dedup::Chunk> chunks(n);
  for (std::size_t i = 0; i < n; ++i) {
    chunks[i].traj_id = "c" + std::to_string(100 + i);
    chunks[i].span_frames = 20;
  }
  const std::size_t total = n * 20 + 55;
  const dedup::DuplicateIndex index(chunks, {rows.data(), n, dim}, model);
  const auto grid = linspace(-1.0, 1.0, 201);
  const auto curve = dedup_ratio_curve(index, chunks, total, grid);
  EXPECT_TRUE(curve.monotone());
  EXPECT_EQ(curve.points.back().ratio, 0.0);
  for (double target : {0.1, 0.2, 0.3}) {
    const auto c = dedup_threshold_for_ratio(index, chunks, total, target);
    EXPECT_LE(c.achieved, target + 1e-12);
    // No candidate between observed similarities does better.
    for (double s : index.pair_similarities()) {
      const auto d = index.chunk_drops(s);
      const double r = static_cast<double>(std::count(d.begin(), d.end(), 1) * 20) / static_cast<double>(total);
      if (r <= target + 1e-12) {
        EXPECT_LE(r, c.achieved + 1e-12);
      }
    }
  }
}

TEST(Calibrate, CombineMasks) {
  const std::vector<std::string> ids{"a", "b"};
  curation::FrameFlags s{{1, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0}};
  curation::FrameFlags d{{0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0}};
  s[1][3] = 1;
  d[0][5] = 1;
  const auto m = combine_masks(ids, s, d);
  EXPECT_DOUBLE_EQ(m.deletion_ratio(), 0.15);
  EXPECT_DOUBLE_EQ(m.suboptimal_ratio(), 0.10);
  EXPECT_DOUBLE_EQ(m.duplicate_ratio(), 0.05);
  EXPECT_EQ(m.trajectories[0].reason[5], curation::Reason::Duplicate);
  const auto same = combine_masks(ids, s, s);
  EXPECT_DOUBLE_EQ(same.deletion_ratio(), 0.10);
  for (const auto& t : same.trajectories)
    for (std::size_t i = 0; i < t.size(); ++i)
      if (!t.keep[i]) {
        EXPECT_EQ(t.reason[i], curation::Reason::Both);
      }
  EXPECT_EQ(union_flags(s, d), union_flags(d, s));
  EXPECT_EQ(union_flags(s, s), s);
  EXPECT_EQ(union_flags(union_flags(s, d), s), union_flags(s, union_flags(d, s)));
  curation::FrameFlags bad{{0}, {0}};
  try {
    combine_masks(ids, s, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MaskShapeMismatch);
  }
}

TEST(Calibrate, MaskFilesRoundTrip) {
  testutil::TempDir dir("masks");
  const std::vector<std::string> ids{"a", "b"};
  curation::FrameFlags s{{1, 0, 1}, {0, 0}};
  curation::FrameFlags d{{1, 1, 0}, {0, 1}};
  auto m = combine_masks(ids, s, d);
  m.trajectories[0].subopt_score = {0.1, -2.5, 1e-17};
  m.trajectories[1].dup_similarity = {-1.0, 0.123456789012345};
  curation::write_masks(m, dir.path());
  EXPECT_TRUE(std::filesystem::exists(dir / "masks" / "a.json"));
  EXPECT_EQ(curation::read_masks(dir.path()), m);
  EXPECT_EQ(curation::read_masks(dir / "masks"), m);
}

}  // namespace
