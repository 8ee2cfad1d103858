#include "trajcurate/progress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "trajcurate/error.hpp"
#include "trajcurate/rng.hpp"

namespace trajcurate::progress {

void TemporalBins::validate() const {
  if (edges.empty() || edges.front() != 0.0)
    throw Error(Errc::InvalidConfig, "bin edges must start at 0");
  if (representatives.size() != edges.size())
    throw Error(Errc::InvalidConfig, "one representative per bin required");
  for (std::size_t b = 0; b < edges.size(); ++b) {
    if (b + 1 < edges.size() && !(edges[b] < edges[b + 1]))
      throw Error(Errc::InvalidConfig, "bin edges must be strictly increasing");
    const double hi = b + 1 < edges.size() ? edges[b + 1] : INFINITY;
    if (!(representatives[b] >= edges[b] && representatives[b] < hi))
      throw Error(Errc::InvalidConfig, "representative " + std::to_string(b) + " outside its bin");
  }
}

std::size_t bin_of(const TemporalBins& bins, double dt) {
  if (!(dt >= 0.0)) throw Error(Errc::NegativeDuration, std::to_string(dt));
  // first edge strictly greater than dt, minus one
  const auto it = std::upper_bound(bins.edges.begin(), bins.edges.end(), dt);
  return static_cast<std::size_t>(it - bins.edges.begin()) - 1;
}

std::vector<double> delta_feature(std::span<const float> obs_i, std::span<const float> obs_j) {
  if (obs_i.size() != obs_j.size()) throw Error(Errc::DimensionMismatch, "frame embeddings differ in length");
  std::vector<double> d(obs_i.size());
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] = static_cast<double>(obs_j[k]) - static_cast<double>(obs_i[k]);
  return d;
}

std::vector<PairSample> sample_training_pairs(const store::Dataset& ds, const TemporalBins& bins,
                                              const SamplingConfig& cfg) {
  bins.validate();
  if (!(cfg.dt_cap > bins.edges.back()))
    throw Error(Errc::InvalidConfig, "dt_cap must exceed the last bin edge");

  std::vector<PairSample> out;
  const std::size_t B = bins.size();
  for (std::size_t ti = 0; ti < ds.trajectories.size(); ++ti) {
    const auto& traj = ds.trajectories[ti];
    const std::size_t n = traj.size();
    if (n < 2) continue;

    // Offsets are whole frames in [1, n-1]; bin_of is monotone in the offset,
    // so each bin's feasible offsets form one contiguous range.
    std::vector<std::size_t> lo(B, 0), hi(B, 0);
    std::vector<bool> seen(B, false);
    for (std::size_t d = 1; d < n; ++d) {
      const double dt = static_cast<double>(d) / traj.fps;
      if (dt > cfg.dt_cap) break;
      const std::size_t b = bin_of(bins, dt);
      if (!seen[b]) {
        seen[b] = true;
        lo[b] = d;
      }
      hi[b] = d;
    }
    std::vector<std::size_t> feasible;
    for (std::size_t b = 0; b < B; ++b)
      if (seen[b]) feasible.push_back(b);
    if (feasible.empty()) continue;

    std::mt19937_64 rng(derive_seed(cfg.seed, streams::kPairSampling, ti));
    for (std::size_t p = 0; p < cfg.pairs_per_traj; ++p) {
      const std::size_t b =
          feasible[std::uniform_int_distribution<std::size_t>(0, feasible.size() - 1)(rng)];
      const std::size_t d = std::uniform_int_distribution<std::size_t>(lo[b], hi[b])(rng);
      const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1 - d)(rng);
      PairSample s;
      s.x = delta_feature(traj.obs_at(t), traj.obs_at(t + d));
      s.label = static_cast<int>(b);
      s.traj_index = ti;
      s.t = t;
      s.dt_frames = d;
      s.dt_seconds = static_cast<double>(d) / traj.fps;
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

nn::LabeledSet to_labeled(const std::vector<PairSample>& pairs, std::span<const std::size_t> idx,
                          std::size_t dim) {
  nn::LabeledSet set;
  set.dim = dim;
  set.x.reserve(idx.size() * dim);
  set.labels.reserve(idx.size());
  for (auto i : idx) set.push(pairs[i].x, pairs[i].label);
  return set;
}

// Folds x -> (x - mean) / scale into the first layer.
void fold_standardization(nn::MlpClassifier& model, std::span<const double> mean,
                          std::span<const double> scale) {
  auto& first = model.layers.front();
  for (std::size_t j = 0; j < first.out; ++j) {
    double shift = 0.0;
    for (std::size_t i = 0; i < first.in; ++i) {
      double& w = first.weights[i * first.out + j];
      w /= scale[i];
      shift += mean[i] * w;
    }
    first.bias[j] -= shift;
  }
}

}  // namespace

ValidationReport evaluate_pairs(const nn::MlpClassifier& model, const TemporalBins& bins,
                                const std::vector<PairSample>& pairs) {
  ValidationReport r;
  r.confusion.assign(bins.size(), std::vector<std::size_t>(bins.size(), 0));
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const auto pred = nn::argmax(nn::logits(model, p.x));
    ++r.confusion[static_cast<std::size_t>(p.label)][pred];
    if (pred == static_cast<std::size_t>(p.label)) ++correct;
  }
  r.pairs_val = pairs.size();
  r.accuracy = pairs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pairs.size());
  return r;
}

TrainedProgressModel train_progress_model(const store::Dataset& ds, const TemporalBins& bins,
                                          const ProgressTrainConfig& cfg) {
  auto pairs = sample_training_pairs(ds, bins, cfg.sampling);
  if (pairs.empty()) throw Error(Errc::EmptyTrainingSet, "dataset yields no training pairs");

  // Split by trajectory, never by pair.
  std::vector<std::size_t> trajs;
  for (const auto& p : pairs)
    if (trajs.empty() || trajs.back() != p.traj_index) trajs.push_back(p.traj_index);
  std::mt19937_64 rng(derive_seed(cfg.sampling.seed, streams::kSplit));
  std::shuffle(trajs.begin(), trajs.end(), rng);
  std::size_t n_val = 0;
  if (trajs.size() >= 2 && cfg.val_fraction > 0.0) {
    n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(trajs.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, trajs.size() - 1);
  }
  std::vector<bool> is_val(ds.trajectories.size(), false);
  for (std::size_t k = 0; k < n_val; ++k) is_val[trajs[k]] = true;

  std::vector<std::size_t> train_idx;
  std::vector<PairSample> val_pairs;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (is_val[pairs[i].traj_index])
      val_pairs.push_back(pairs[i]);
    else
      train_idx.push_back(i);
  }

  const std::size_t dim = ds.obs_dim;
  auto train_set = to_labeled(pairs, train_idx, dim);

  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (std::size_t r = 0; r < train_set.size(); ++r)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += train_set.x[r * dim + k];
  for (auto& m : mean) m /= static_cast<double>(train_set.size());
  for (std::size_t r = 0; r < train_set.size(); ++r)
    for (std::size_t k = 0; k < dim; ++k) {
      const double c = train_set.x[r * dim + k] - mean[k];
      scale[k] += c * c;
    }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(train_set.size()));
    if (!(s > 1e-12)) s = 1.0;
  }
  for (std::size_t r = 0; r < train_set.size(); ++r)
    for (std::size_t k = 0; k < dim; ++k)
      train_set.x[r * dim + k] = (train_set.x[r * dim + k] - mean[k]) / scale[k];

  std::vector<std::size_t> sizes{dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(bins.size());
  auto trained = nn::train(nn::init(sizes, cfg.train.seed), train_set, cfg.train);

  TrainedProgressModel out;
  out.model = std::move(trained.model);
  out.initial_loss = trained.initial_loss;
  out.final_loss = trained.final_loss;
  fold_standardization(out.model, mean, scale);
  nn::quantize_to_f32(out.model);
  out.report = evaluate_pairs(out.model, bins, val_pairs);
  out.report.pairs_train = train_idx.size();
  return out;
}

double progress_from_probs(const TemporalBins& bins, std::span<const double> probs,
                           ProgressMode mode) {
  if (probs.size() != bins.size()) throw Error(Errc::DimensionMismatch, "probability vector length");
  if (mode == ProgressMode::Argmax) return bins.representatives[nn::argmax(probs)];
  double tp = 0.0;
  for (std::size_t b = 0; b < probs.size(); ++b) tp += probs[b] * bins.representatives[b];
  const auto [lo, hi] = std::minmax_element(bins.representatives.begin(), bins.representatives.end());
  return std::clamp(tp, *lo, *hi);
}

double predict_progress(const nn::MlpClassifier& model, const TemporalBins& bins,
                        std::span<const float> obs_i, std::span<const float> obs_j,
                        ProgressMode mode) {
  const auto p = nn::forward(model, delta_feature(obs_i, obs_j));
  return progress_from_probs(bins, p, mode);
}

}  // namespace trajcurate::progress
