#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "trajcurate/error.hpp"
#include "trajcurate/subopt.hpp"

namespace {

using namespace trajcurate;
using namespace trajcurate::subopt;

constexpr double kInf = std::numeric_limits<double>::infinity();

nn::MlpClassifier biased_model(std::size_t dim, std::size_t bin) {
  auto m = nn::init({dim, 4, 5}, 0);
  nn::unflatten(m, std::vector<double>(m.num_parameters(), 0.0));
  m.layers.back().bias[bin] = 1000.0;
  return m;
}

store::Trajectory blank(std::size_t len, std::size_t dim = 2) {
  store::Trajectory t("x", 10.0, dim, 1);
  t.obs.assign(len * dim, 0.0f);
  t.actions.assign(len, 0.0f);
  return t;
}

TEST(Subopt, WindowScoreArithmetic) {
  const progress::TemporalBins bins;
  const SuboptConfig cfg;
  const auto traj = blank(30);
  const store::Window win{"x", 3, 20, 2.0};
  EXPECT_NEAR(window_score(biased_model(2, 0), bins, traj, win, cfg), 1.75, 1e-12);
  EXPECT_NEAR(window_score(biased_model(2, 4), bins, traj, win, cfg), -5.5, 1e-12);
  // Representatives 2.0 for every bin make T_p = 2.0 for any distribution.
  progress::TemporalBins flat;
  flat.representatives = {2.0, 2.0, 2.0, 2.0, 7.0};
  EXPECT_NEAR(window_score(biased_model(2, 1), flat, traj, win, cfg), 0.0, 1e-12);
  const store::Window outside{"x", 15, 20, 2.0};
  EXPECT_THROW(window_score(biased_model(2, 0), bins, traj, outside, cfg), Error);
}

TEST(Subopt, AggregateByEnumeration) {
  const std::vector<double> v{1.0, 10.0, 100.0, 1000.0, 10000.0};
  const double a = v[0], b = v[1], c = v[2], d = v[3], e = v[4];
  const std::vector<double> expect{a,
                                   (a + b) / 2,
                                   (a + b + c) / 3,
                                   (a + b + c + d) / 4,
                                   (b + c + d + e) / 4,
                                   (c + d + e) / 3,
                                   (d + e) / 2};
  const auto got = aggregate_sample_scores(v, 3, 7);
  ASSERT_EQ(got.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(got[i], expect[i]);
}

TEST(Subopt, AggregateConstantAndSingleWindow) {
  for (double x : aggregate_sample_scores(std::vector<double>(11, -0.4), 20, 30)) EXPECT_DOUBLE_EQ(x, -0.4);
  const auto one = aggregate_sample_scores(std::vector<double>{1.2}, 20, 20);
  ASSERT_EQ(one.size(), 20u);
  for (double x : one) EXPECT_DOUBLE_EQ(x, 1.2);
  // Strided windows leave gaps that get no score.
  const std::vector<double> s{2.0, 4.0};
  const std::vector<std::size_t> starts{0, 10};
  const auto strided = aggregate_sample_scores(s, starts, 3, 20);
  EXPECT_DOUBLE_EQ(strided[3], 2.0);
  EXPECT_DOUBLE_EQ(strided[5], 0.0);
  EXPECT_DOUBLE_EQ(strided[12], 4.0);
  EXPECT_DOUBLE_EQ(strided[14], 0.0);
}

TEST(Subopt, DiscountExamples) {
  const std::vector<double> v{2.0, 0.0, 4.0};
  EXPECT_EQ(discount_scores(v, 0.0), v);
  EXPECT_EQ(discount_scores(std::vector<double>{1, 1, 1}, 1.0), (std::vector<double>{1, 2, 3}));
  const auto half = discount_scores(v, 0.5);
  EXPECT_DOUBLE_EQ(half[0], 2.0);
  EXPECT_DOUBLE_EQ(half[1], 1.0);
  EXPECT_DOUBLE_EQ(half[2], 4.5);
  const auto rev = discount_scores(v, 0.5, true);
  EXPECT_DOUBLE_EQ(rev[2], 4.0);
  EXPECT_DOUBLE_EQ(rev[1], 2.0);
  EXPECT_DOUBLE_EQ(rev[0], 3.0);
}

TEST(Subopt, DiscountRecurrenceMatchesDoubleSum) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> ug(0.0, 0.99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(1000);
    for (auto& x : v) x = g(rng);
    const double gamma = ug(rng);
    const auto got = discount_scores(v, gamma);
    for (std::size_t i = 0; i < v.size(); i += 37) {
      double direct = 0.0;
      for (std::size_t t = 0; t <= i; ++t) direct += std::pow(gamma, static_cast<double>(i - t)) * v[t];
      EXPECT_TRUE(oracle::close(got[i], direct, 1e-9)) << got[i] << " vs " << direct;
    }
  }
}

TEST(Subopt, MixExamples) {
  EXPECT_EQ(mix_scores(std::vector<double>{0.0, 2.0}, 0.5), (std::vector<double>{0.5, 1.5}));
  for (double x : mix_scores(std::vector<double>(9, 0.7), 0.5)) EXPECT_DOUBLE_EQ(x, 0.7);
  const std::vector<double> v{0.1, -3.0, 8.0};
  EXPECT_EQ(mix_scores(v, 0.0), v);
  EXPECT_TRUE(mix_scores(std::vector<double>{}, 0.5).empty());
}

TEST(Subopt, MaskStrictInequality) {
  EXPECT_EQ(subopt_mask(std::vector<double>(5, 0.58), 0.58), std::vector<std::uint8_t>(5, 0));
  EXPECT_EQ(subopt_mask(std::vector<double>{0.6, 0.5, 0.59}, 0.58), (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_EQ(subopt_mask(std::vector<double>{1e300, 5.0}, kInf), (std::vector<std::uint8_t>{0, 0}));
  EXPECT_EQ(subopt_mask(std::vector<double>{9.0, 9.0}, 0.0, false), (std::vector<std::uint8_t>{0, 0}));
}

TEST(Subopt, GammaZeroAndNoMixGiveSampleScores) {
  SuboptConfig cfg;
  cfg.gamma = 0.0;
  cfg.mix_weight = 0.0;
  const std::vector<double> w{0.3, -1.0, 2.0, 0.5, 0.1, 0.0};
  std::vector<std::size_t> starts(w.size());
  for (std::size_t k = 0; k < starts.size(); ++k) starts[k] = k;
  const auto s = compose_series("x", w, starts, 4, 9, cfg);
  EXPECT_EQ(s.final_scores, s.sample_scores);
  EXPECT_EQ(s.discounted, s.sample_scores);
}

TEST(Subopt, ScalingWindowScoresScalesEverything) {
  SuboptConfig cfg;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(40);
  for (auto& x : w) x = g(rng);
  std::vector<std::size_t> starts(w.size());
  for (std::size_t k = 0; k < starts.size(); ++k) starts[k] = k;
  const auto base = compose_series("x", w, starts, 20, 59, cfg);
  std::vector<double> w3 = w;
  for (auto& x : w3) x *= 3.0;
  const auto scaled = compose_series("x", w3, starts, 20, 59, cfg);
  for (std::size_t i = 0; i < base.final_scores.size(); ++i)
    EXPECT_TRUE(oracle::close(scaled.final_scores[i], 3.0 * base.final_scores[i], 1e-12));
  EXPECT_EQ(subopt_mask(base.final_scores, 0.4), subopt_mask(scaled.final_scores, 1.2));
}

TEST(Subopt, DropsAreMonotoneInThreshold) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> s(500);
  for (auto& x : s) x = g(rng);
  auto prev = subopt_mask(s, -5.0);
  for (double eps = -4.9; eps < 5.0; eps += 0.1) {
    const auto cur = subopt_mask(s, eps);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LE(cur[i], prev[i]);
    prev = cur;
  }
}

TEST(Subopt, OnScheduleDatasetHasZeroScores) {
  store::Dataset ds;
  ds.obs_dim = 2;
  ds.action_dim = 1;
  ds.trajectories.push_back(blank(45));
  progress::TemporalBins bins;
  const auto m = biased_model(2, 2);
  bins.representatives[2] = 1.9999999999999998;  // strictly inside [1, 2)
  SuboptConfig cfg;
  cfg.window_seconds = bins.representatives[2];  // T_p equals T exactly
  const auto r = score_dataset(ds, m, bins, cfg);
  for (double x : r.series[0].final_scores) EXPECT_NEAR(x, 0.0, 1e-12);
  EXPECT_EQ(r.dropped_frames, 0u);
}

TEST(Subopt, ScoreDatasetMatchesBruteForceOracle) {
  const auto ds = testutil::random_dataset(12, 5, 120, 6, 2, 21, 10.0);
  const auto model = nn::init({6, 12, 5}, 4);
  const progress::TemporalBins bins;
  SuboptConfig cfg;
  cfg.window_seconds = 0.5;  // W = 5
  const auto r = score_dataset(ds, model, bins, cfg);
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
    const auto& traj = ds.trajectories[t];
    const auto o = oracle::subopt_series(model, bins.representatives, traj, 5, 0.5, cfg.gamma, cfg.mix_weight);
    const auto& s = r.series[t];
    EXPECT_TRUE(oracle::all_close(s.window_scores, o.window, 1e-9));
    EXPECT_TRUE(oracle::all_close(s.sample_scores, o.sample, 1e-9));
    EXPECT_TRUE(oracle::all_close(s.discounted, o.discounted, 1e-9));
    EXPECT_TRUE(oracle::all_close(s.final_scores, o.mixed, 1e-9));
  }
}

TEST(Subopt, ShortTrajectoriesNeverDrop) {
  const auto ds = testutil::random_dataset(3, 10, 19, 3, 1, 6);
  const auto r = score_dataset(ds, biased_model(3, 0), progress::TemporalBins{}, SuboptConfig{});
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_FALSE(r.series[t].scored);
    EXPECT_TRUE(r.series[t].window_scores.empty());
    EXPECT_EQ(r.drop[t], std::vector<std::uint8_t>(ds.trajectories[t].size(), 0));
  }
  EXPECT_EQ(r.dropped_frames, 0u);
}

TEST(Subopt, ThreadCountDoesNotChangeScores) {
  const auto ds = testutil::random_dataset(30, 20, 90, 8, 2, 13);
  const auto model = nn::init({8, 16, 5}, 2);
  const auto a = score_dataset(ds, model, progress::TemporalBins{}, SuboptConfig{}, 1);
  const auto b = score_dataset(ds, model, progress::TemporalBins{}, SuboptConfig{}, 4);
  ASSERT_EQ(a.series.size(), b.series.size());
  for (std::size_t t = 0; t < a.series.size(); ++t) EXPECT_EQ(a.series[t].final_scores, b.series[t].final_scores);
  EXPECT_EQ(a.drop, b.drop);
}

TEST(Subopt, ApplyThresholdMatchesRescoring) {
  const auto ds = testutil::random_dataset(10, 30, 60, 4, 1, 3);
  const auto model = nn::init({4, 8, 5}, 1);
  SuboptConfig cfg;
  auto r = score_dataset(ds, model, progress::TemporalBins{}, cfg);
  cfg.epsilon_s = 1.3;
  const auto fresh = score_dataset(ds, model, progress::TemporalBins{}, cfg);
  apply_threshold(r, 1.3);
  EXPECT_EQ(r.drop, fresh.drop);
  EXPECT_EQ(r.dropped_frames, fresh.dropped_frames);
}

TEST(Subopt, ConfigValidation) {
  SuboptConfig c;
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = SuboptConfig{};
  c.mix_weight = -0.1;
  EXPECT_THROW(c.validate(), Error);
  c = SuboptConfig{};
  c.window_seconds = 0.0;
  EXPECT_THROW(c.validate(), Error);
  const auto ds = testutil::random_dataset(1, 30, 30, 4, 1, 3);
  EXPECT_THROW(score_dataset(ds, nn::init({3, 5}, 0), progress::TemporalBins{}, SuboptConfig{}), Error);
}

}  // namespace
