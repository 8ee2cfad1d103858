#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajcurate/tinynn.hpp"
#include "trajcurate/trajstore.hpp"

namespace trajcurate::progress {

/// Half-open progress-gap bins in seconds; the last bin is unbounded.
/// `representatives` converts a bin distribution into seconds of progress.
struct TemporalBins {
  std::vector<double> edges{0.0, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> representatives{0.25, 0.75, 1.5, 3.5, 7.5};

  std::size_t size() const { return edges.size(); }
  void validate() const;
};

enum class ProgressMode { Expectation, Argmax };

std::size_t bin_of(const TemporalBins& bins, double dt_seconds);

/// Delta feature obs_j - obs_i, widened to double.
std::vector<double> delta_feature(std::span<const float> obs_i, std::span<const float> obs_j);

struct PairSample {
  std::vector<double> x;
  int label = 0;
  std::size_t traj_index = 0;
  std::size_t t = 0;
  std::size_t dt_frames = 0;
  double dt_seconds = 0.0;
};

struct SamplingConfig {
  std::size_t pairs_per_traj = 64;
  double dt_cap = 10.0;
  std::uint64_t seed = 0;
};

/// Per trajectory: draw a bin uniformly among the bins that have at least one
/// whole-frame offset inside the trajectory (last bin capped at dt_cap), an
/// offset uniformly among that bin's offsets, then an anchor uniformly.
std::vector<PairSample> sample_training_pairs(const store::Dataset& ds,
                                              const TemporalBins& bins,
                                              const SamplingConfig& cfg);

struct ValidationReport {
  std::size_t pairs_train = 0;
  std::size_t pairs_val = 0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct ProgressTrainConfig {
  std::vector<std::size_t> hidden{64, 64};
  nn::TrainConfig train{};
  SamplingConfig sampling{};
  double val_fraction = 0.1;
};

struct TrainedProgressModel {
  nn::MlpClassifier model;
  ValidationReport report;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Samples pairs, splits them by trajectory, standardizes the delta features
/// on the training split and folds the standardization back into the first
/// layer, so the returned model consumes raw delta features. Parameters are
/// rounded to checkpoint (f32) precision before validation.
TrainedProgressModel train_progress_model(const store::Dataset& ds, const TemporalBins& bins,
                                          const ProgressTrainConfig& cfg);

ValidationReport evaluate_pairs(const nn::MlpClassifier& model, const TemporalBins& bins,
                                const std::vector<PairSample>& pairs);

/// Seconds of progress implied by a bin distribution.
double progress_from_probs(const TemporalBins& bins, std::span<const double> probs,
                           ProgressMode mode = ProgressMode::Expectation);

double predict_progress(const nn::MlpClassifier& model, const TemporalBins& bins,
                        std::span<const float> obs_i, std::span<const float> obs_j,
                        ProgressMode mode = ProgressMode::Expectation);

}  // namespace trajcurate::progress
