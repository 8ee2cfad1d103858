#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajcurate/progress.hpp"
#include "trajcurate/tinynn.hpp"
#include "trajcurate/trajstore.hpp"

namespace trajcurate::subopt {

struct SuboptConfig {
  double window_seconds = 2.0;
  std::size_t stride_frames = 1;
  double gamma = 0.9;
  double mix_weight = 0.5;
  double epsilon_s = 0.58;
  /// Accumulate future scores into the past instead of past into future.
  bool reverse_discount = false;
  progress::ProgressMode mode = progress::ProgressMode::Expectation;

  void validate() const;
};

/// Scores of one trajectory at every stage. Window arrays are indexed by
/// window; the per-frame arrays have one entry per frame.
struct ScoreSeries {
  std::string traj_id;
  std::size_t span_frames = 0;
  bool scored = false;  // false when the trajectory is shorter than a window
  std::vector<std::size_t> window_starts;
  std::vector<double> window_scores;
  std::vector<double> sample_scores;
  std::vector<double> discounted;
  std::vector<double> final_scores;
};

/// window_seconds minus the predicted progress between the window's first
/// and last frame. Positive means behind schedule.
double window_score(const nn::MlpClassifier& model, const progress::TemporalBins& bins,
                    const store::Trajectory& traj, const store::Window& window,
                    const SuboptConfig& cfg);

/// Per-frame mean of the scores of windows starting in [i - W, i]; frames no
/// window reaches get 0. The first overload assumes stride 1.
std::vector<double> aggregate_sample_scores(std::span<const double> window_scores,
                                            std::size_t span_frames, std::size_t traj_len);
std::vector<double> aggregate_sample_scores(std::span<const double> window_scores,
                                            std::span<const std::size_t> window_starts,
                                            std::size_t span_frames, std::size_t traj_len);

/// V_i = sum_{t<=i} gamma^(i-t) vhat_t, via V_i = vhat_i + gamma V_{i-1}.
/// With reverse = true the sum runs over t >= i instead.
std::vector<double> discount_scores(std::span<const double> v_hat, double gamma,
                                    bool reverse = false);

/// w * mean(V) + (1 - w) * V_i.
std::vector<double> mix_scores(std::span<const double> discounted, double mix_weight);

/// drop_i iff final_i > epsilon_s. Ineligible trajectories never drop.
std::vector<std::uint8_t> subopt_mask(std::span<const double> final_scores, double epsilon_s,
                                      bool eligible = true);

/// aggregate -> discount -> mix for already-computed window scores.
ScoreSeries compose_series(std::string traj_id, std::span<const double> window_scores,
                           std::span<const std::size_t> window_starts, std::size_t span_frames,
                           std::size_t traj_len, const SuboptConfig& cfg);

struct SuboptResult {
  std::vector<ScoreSeries> series;               // one per trajectory, dataset order
  std::vector<std::vector<std::uint8_t>> drop;   // per trajectory, per frame
  std::size_t dropped_frames = 0;
  std::size_t total_frames = 0;

  double deletion_ratio() const {
    return total_frames == 0 ? 0.0
                             : static_cast<double>(dropped_frames) / static_cast<double>(total_frames);
  }
};

/// Recomputes masks for a different threshold without rescoring.
void apply_threshold(SuboptResult& result, double epsilon_s);

SuboptResult score_dataset(const store::Dataset& ds, const nn::MlpClassifier& model,
                           const progress::TemporalBins& bins, const SuboptConfig& cfg,
                           int threads = 1);

}  // namespace trajcurate::subopt
