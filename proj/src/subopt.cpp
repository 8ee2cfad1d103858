#include "trajcurate/subopt.hpp"

#include <algorithm>
#include <cmath>

#include "trajcurate/error.hpp"
#include "trajcurate/kernels.hpp"
#include "trajcurate/parallel.hpp"

namespace trajcurate::subopt {

void SuboptConfig::validate() const {
  if (!(window_seconds > 0.0)) throw Error(Errc::InvalidConfig, "window_seconds must be positive");
  if (stride_frames == 0) throw Error(Errc::InvalidConfig, "stride_frames must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::InvalidConfig, "gamma must lie in [0, 1]");
  if (!(mix_weight >= 0.0 && mix_weight <= 1.0))
    throw Error(Errc::InvalidConfig, "mix_weight must lie in [0, 1]");
  if (std::isnan(epsilon_s)) throw Error(Errc::InvalidConfig, "epsilon_s is NaN");
}

double window_score(const nn::MlpClassifier& model, const progress::TemporalBins& bins,
                    const store::Trajectory& traj, const store::Window& window,
                    const SuboptConfig& cfg) {
  if (window.span_frames == 0 || window.start + window.span_frames > traj.size())
    throw Error(Errc::ShapeMismatch, "window outside trajectory " + traj.id);
  const std::size_t last = window.start + window.span_frames - 1;
  return cfg.window_seconds -
         progress::predict_progress(model, bins, traj.obs_at(window.start), traj.obs_at(last), cfg.mode);
}

std::vector<double> aggregate_sample_scores(std::span<const double> window_scores,
                                            std::span<const std::size_t> window_starts,
                                            std::size_t span_frames, std::size_t traj_len) {
  if (window_scores.size() != window_starts.size())
    throw Error(Errc::ShapeMismatch, "one start per window score required");
  std::vector<double> out(traj_len, 0.0);
  for (std::size_t i = 0; i < traj_len; ++i) {
    const std::size_t lo = i >= span_frames ? i - span_frames : 0;
    // starts are ascending
    auto first = std::lower_bound(window_starts.begin(), window_starts.end(), lo);
    auto last = std::upper_bound(window_starts.begin(), window_starts.end(), i);
    const auto count = last - first;
    if (count <= 0) continue;
    double sum = 0.0;
    for (auto it = first; it != last; ++it)
      sum += window_scores[static_cast<std::size_t>(it - window_starts.begin())];
    out[i] = sum / static_cast<double>(count);
  }
  return out;
}

std::vector<double> aggregate_sample_scores(std::span<const double> window_scores,
                                            std::size_t span_frames, std::size_t traj_len) {
  std::vector<std::size_t> starts(window_scores.size());
  for (std::size_t k = 0; k < starts.size(); ++k) starts[k] = k;
  return aggregate_sample_scores(window_scores, starts, span_frames, traj_len);
}

std::vector<double> discount_scores(std::span<const double> v_hat, double gamma, bool reverse) {
  std::vector<double> out(v_hat.size());
  const std::size_t n = v_hat.size();
  double carry = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = reverse ? n - 1 - k : k;
    carry = v_hat[i] + gamma * carry;
    out[i] = carry;
  }
  return out;
}

std::vector<double> mix_scores(std::span<const double> discounted, double mix_weight) {
  if (discounted.empty()) return {};
  double sum = 0.0;
  for (double v : discounted) sum += v;
  const double mean = sum / static_cast<double>(discounted.size());
  std::vector<double> out(discounted.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = mix_weight * mean + (1.0 - mix_weight) * discounted[i];
  return out;
}

std::vector<std::uint8_t> subopt_mask(std::span<const double> final_scores, double epsilon_s,
                                      bool eligible) {
  std::vector<std::uint8_t> drop(final_scores.size(), 0);
  if (!eligible) return drop;
  for (std::size_t i = 0; i < drop.size(); ++i) drop[i] = final_scores[i] > epsilon_s ? 1 : 0;
  return drop;
}

ScoreSeries compose_series(std::string traj_id, std::span<const double> window_scores,
                           std::span<const std::size_t> window_starts, std::size_t span_frames,
                           std::size_t traj_len, const SuboptConfig& cfg) {
  ScoreSeries s;
  s.traj_id = std::move(traj_id);
  s.span_frames = span_frames;
  s.scored = !window_scores.empty();
  s.window_starts.assign(window_starts.begin(), window_starts.end());
  s.window_scores.assign(window_scores.begin(), window_scores.end());
  s.sample_scores = aggregate_sample_scores(window_scores, window_starts, span_frames, traj_len);
  s.discounted = discount_scores(s.sample_scores, cfg.gamma, cfg.reverse_discount);
  s.final_scores = mix_scores(s.discounted, cfg.mix_weight);
  return s;
}

void apply_threshold(SuboptResult& result, double epsilon_s) {
  result.dropped_frames = 0;
  result.total_frames = 0;
  result.drop.resize(result.series.size());
  for (std::size_t t = 0; t < result.series.size(); ++t) {
    const auto& s = result.series[t];
    result.drop[t] = subopt_mask(s.final_scores, epsilon_s, s.scored);
    result.total_frames += s.final_scores.size();
    result.dropped_frames += static_cast<std::size_t>(
        std::count(result.drop[t].begin(), result.drop[t].end(), std::uint8_t{1}));
  }
}

SuboptResult score_dataset(const store::Dataset& ds, const nn::MlpClassifier& model,
                           const progress::TemporalBins& bins, const SuboptConfig& cfg,
                           int threads) {
  cfg.validate();
  bins.validate();
  if (model.input_size() != ds.obs_dim || model.num_classes() != bins.size())
    throw Error(Errc::DimensionMismatch, "progress model does not match dataset/bins");

  // Every window of every trajectory becomes one row of delta features, so
  // the classifier runs as one flat batch.
  struct Span {
    std::size_t first_row = 0;
    std::vector<store::Window> windows;
  };
  std::vector<Span> spans(ds.trajectories.size());
  std::size_t rows = 0;
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
    spans[t].first_row = rows;
    spans[t].windows = store::sliding_windows(ds.trajectories[t], cfg.window_seconds, cfg.stride_frames);
    rows += spans[t].windows.size();
  }

  const std::size_t D = ds.obs_dim;
  std::vector<double> deltas(rows * D);
  parallel_for(ds.trajectories.size(), threads, [&](std::size_t t) {
    const auto& traj = ds.trajectories[t];
    for (std::size_t w = 0; w < spans[t].windows.size(); ++w) {
      const auto& win = spans[t].windows[w];
      const auto a = traj.obs_at(win.start);
      const auto b = traj.obs_at(win.start + win.span_frames - 1);
      double* out = deltas.data() + (spans[t].first_row + w) * D;
      for (std::size_t k = 0; k < D; ++k)
        out[k] = static_cast<double>(b[k]) - static_cast<double>(a[k]);
    }
  });

  std::vector<double> probs(rows * bins.size());
  kernels::mlp_probs(model, {deltas.data(), rows, D}, probs, threads);

  SuboptResult result;
  result.series.resize(ds.trajectories.size());
  parallel_for(ds.trajectories.size(), threads, [&](std::size_t t) {
    const auto& traj = ds.trajectories[t];
    const auto& sp = spans[t];
    std::vector<double> scores(sp.windows.size());
    std::vector<std::size_t> starts(sp.windows.size());
    for (std::size_t w = 0; w < sp.windows.size(); ++w) {
      const std::span<const double> p(probs.data() + (sp.first_row + w) * bins.size(), bins.size());
      scores[w] = cfg.window_seconds - progress::progress_from_probs(bins, p, cfg.mode);
      starts[w] = sp.windows[w].start;
    }
    const std::size_t W = store::seconds_to_frames(cfg.window_seconds, traj.fps);
    result.series[t] = compose_series(traj.id, scores, starts, W, traj.size(), cfg);
  });
  apply_threshold(result, cfg.epsilon_s);
  return result;
}

}  // namespace trajcurate::subopt
