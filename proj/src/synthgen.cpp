#include "trajcurate/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "trajcurate/dedup.hpp"
#include "trajcurate/error.hpp"
#include "trajcurate/parallel.hpp"
#include "trajcurate/rng.hpp"

namespace trajcurate::synth {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view anomaly_name(AnomalyType t) {
  switch (t) {
    case AnomalyType::Clean: return "clean";
    case AnomalyType::Pause: return "pause";
    case AnomalyType::Slow: return "slow";
    case AnomalyType::BackAndForth: return "back_and_forth";
    case AnomalyType::FailureRetry: return "failure_retry";
  }
  return "clean";
}

AnomalyType parse_anomaly(std::string_view s) {
  if (s == "clean") return AnomalyType::Clean;
  for (auto t : kAnomalyTypes)
    if (s == anomaly_name(t)) return t;
  throw Error(Errc::InvalidConfig, "unknown anomaly type '" + std::string(s) + "'");
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidConfig, m); };
  if (num_traj == 0) fail("num_traj must be positive");
  if (frames_per_traj < 2) fail("frames_per_traj must be at least 2");
  if (!(fps > 0.0) || !std::isfinite(fps)) fail("fps must be positive");
  if (obs_dim == 0 || action_dim == 0) fail("obs_dim and action_dim must be positive");
  double total = 0.0;
  for (const auto& [type, rate] : anomaly_rates) {
    if (type == AnomalyType::Clean) fail("clean is not an anomaly type");
    if (!(rate >= 0.0 && rate <= 1.0)) fail("anomaly rate outside [0, 1]");
    total += rate;
  }
  if (total > 1.0 + 1e-12) fail("anomaly rates sum above 1");
  if (!(duplicate_rate >= 0.0 && duplicate_rate <= 1.0)) fail("duplicate_rate outside [0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be non-negative");
  if (!(chunk_seconds > 0.0)) fail("chunk_seconds must be positive");
  for (double s : {phase_scale, harmonic_scale, context_scale, position_span})
    if (!(s >= 0.0) || !std::isfinite(s)) fail("latent scales must be non-negative");
}

LatentTrack simulate_track(std::size_t frames, double fps,
                           const std::optional<AnomalySegment>& seg) {
  const double rate = 1.0 / static_cast<double>(frames);
  LatentTrack tr;
  tr.phase.assign(frames, 0.0);
  tr.tags.assign(frames, AnomalyType::Clean);
  tr.context_blend.assign(frames, 0.0);
  if (seg && (seg->length == 0 || seg->start == 0 || seg->start + seg->length > frames))
    throw Error(Errc::InvalidConfig, "anomaly segment outside the trajectory");

  const std::size_t s = seg ? seg->start : frames;
  const std::size_t e = seg ? seg->start + seg->length : frames;
  const AnomalyType type = seg ? seg->type : AnomalyType::Clean;
  const auto period = static_cast<double>(
      seg && seg->period > 0 ? seg->period : store::seconds_to_frames(1.0, fps));
  const double amplitude = rate * fps;  // one second of progress
  double base = 0.0;
  double resume = 0.0;

  for (std::size_t t = 1; t < frames; ++t) {
    const double prev = tr.phase[t - 1];
    const bool in = t >= s && t < e;
    if (in) tr.tags[t] = type;
    if (type == AnomalyType::FailureRetry && t >= s)
      tr.context_blend[t] = in ? static_cast<double>(t - s + 1) / static_cast<double>(e - s) : 1.0;

    if (!in) {
      tr.phase[t] = (t == e && type == AnomalyType::BackAndForth) ? resume : prev + rate;
      continue;
    }
    switch (type) {
      case AnomalyType::Pause:
        tr.phase[t] = t == s ? prev + rate : prev;
        break;
      case AnomalyType::Slow:
        tr.phase[t] = prev + 0.5 * rate;
        break;
      case AnomalyType::BackAndForth:
        if (t == s) {
          base = prev + rate;
          resume = base + rate;
        }
        tr.phase[t] = base + amplitude * std::sin(2.0 * std::numbers::pi *
                                                  static_cast<double>(t - s) / period);
        break;
      case AnomalyType::FailureRetry:
        if (t == s) base = prev;
        tr.phase[t] = base - 0.2 * static_cast<double>(t - s + 1) / static_cast<double>(e - s);
        break;
      case AnomalyType::Clean:
        break;
    }
  }
  return tr;
}

std::size_t GroundTruth::total_frames() const {
  std::size_t n = 0;
  for (const auto& t : tags) n += t.size();
  return n;
}

std::size_t GroundTruth::count(AnomalyType type) const {
  std::size_t n = 0;
  for (const auto& t : tags) n += static_cast<std::size_t>(std::count(t.begin(), t.end(), type));
  return n;
}

namespace {

using Matrix = std::vector<std::vector<double>>;

/// Gram-Schmidt over `count` random Gaussian vectors of length `len`.
Matrix orthonormal_vectors(std::size_t count, std::size_t len, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix v(count, std::vector<double>(len));
  for (std::size_t i = 0; i < count; ++i) {
    for (;;) {
      for (auto& x : v[i]) x = gauss(rng);
      for (std::size_t j = 0; j < i; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < len; ++k) d += v[i][k] * v[j][k];
        for (std::size_t k = 0; k < len; ++k) v[i][k] -= d * v[j][k];
      }
      double n = 0.0;
      for (double x : v[i]) n += x * x;
      n = std::sqrt(n);
      if (n > 1e-6) {
        for (auto& x : v[i]) x /= n;
        break;
      }
    }
  }
  return v;
}

/// obs = Q z with Q of shape obs_dim x latent_dim and orthonormal columns
/// (or rows when the latent is wider than the observation).
Matrix projection(std::size_t obs_dim, std::size_t latent_dim, std::mt19937_64& rng) {
  Matrix q(obs_dim, std::vector<double>(latent_dim));
  if (obs_dim >= latent_dim) {
    const auto cols = orthonormal_vectors(latent_dim, obs_dim, rng);
    for (std::size_t d = 0; d < obs_dim; ++d)
      for (std::size_t l = 0; l < latent_dim; ++l) q[d][l] = cols[l][d];
  } else {
    q = orthonormal_vectors(obs_dim, latent_dim, rng);
  }
  return q;
}

std::string traj_name(std::size_t i) {
  std::string digits = std::to_string(i);
  return "traj_" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

struct TrajectoryDraw {
  store::Trajectory traj;
  LatentTrack track;
  std::vector<std::array<double, 2>> position;
};

AnomalySegment draw_segment(AnomalyType type, std::size_t frames, double fps, std::size_t chunk,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto secs = [&](double lo, double hi) {
    return store::seconds_to_frames(lo + (hi - lo) * unit(rng), fps);
  };
  AnomalySegment seg{type, 0, 0};
  std::size_t lo = chunk;
  switch (type) {
    case AnomalyType::Pause:
      // capped so at most one whole chunk lies inside the pause
      seg.length = std::min(secs(2.5, 3.9), 2 * chunk - 1);
      break;
    case AnomalyType::Slow:
      seg.length = secs(3.0, 6.0);
      break;
    case AnomalyType::BackAndForth:
      seg.period = secs(1.8, 1.95);
      seg.length = std::max<std::size_t>(1, std::min<std::size_t>(2, (2 * chunk - 1) / seg.period)) * seg.period;
      break;
    case AnomalyType::FailureRetry:
      seg.length = secs(1.0, 2.0);
      lo = std::max(lo, static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(frames))) + 1);
      break;
    case AnomalyType::Clean:
      break;
  }
  if (frames < lo + seg.length + chunk)
    throw Error(Errc::InvalidConfig, "frames_per_traj too short to inject " +
                                         std::string(anomaly_name(type)));
  const std::size_t hi = frames - seg.length - chunk;
  seg.start = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  return seg;
}

TrajectoryDraw draw_trajectory(const SynthConfig& cfg, std::size_t index, AnomalyType type,
                               const Matrix& q, const Matrix& act_proj, std::size_t chunk) {
  std::mt19937_64 rng(derive_seed(cfg.seed, streams::kSynthTraj, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::array<double, 2> p0{2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0};
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  const std::array<double, 2> dir{std::cos(angle), std::sin(angle)};
  std::vector<double> context(cfg.context_dim), shift(cfg.context_dim);
  for (auto& c : context) c = cfg.context_scale * gauss(rng);
  for (auto& c : shift) c = cfg.context_scale * gauss(rng);

  std::optional<AnomalySegment> seg;
  if (type != AnomalyType::Clean)
    seg = draw_segment(type, cfg.frames_per_traj, cfg.fps, chunk, rng);

  TrajectoryDraw out;
  const std::size_t n = cfg.frames_per_traj;
  out.track = simulate_track(n, cfg.fps, seg);
  out.position.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    for (int k = 0; k < 2; ++k)
      out.position[t][k] = p0[k] + cfg.position_span * dir[k] * out.track.phase[t];

  const std::size_t L = cfg.latent_dim(), D = cfg.obs_dim, A = cfg.action_dim;
  out.traj = store::Trajectory(traj_name(index), cfg.fps, D, A);
  out.traj.obs.resize(n * D);
  out.traj.actions.resize(n * A);
  out.traj.labels.resize(n);
  std::vector<double> z(L);
  for (std::size_t t = 0; t < n; ++t) {
    const double phi = out.track.phase[t];
    std::size_t p = 0;
    z[p++] = cfg.phase_scale * (phi - 0.5);
    for (std::size_t k = 1; k <= cfg.harmonics; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) * phi;
      z[p++] = cfg.harmonic_scale * std::cos(a);
      z[p++] = cfg.harmonic_scale * std::sin(a);
    }
    z[p++] = out.position[t][0];
    z[p++] = out.position[t][1];
    for (std::size_t c = 0; c < cfg.context_dim; ++c)
      z[p++] = context[c] + out.track.context_blend[t] * shift[c];

    auto obs = out.traj.obs_at(t);
    for (std::size_t d = 0; d < D; ++d) {
      double v = 0.0;
      for (std::size_t l = 0; l < L; ++l) v += q[d][l] * z[l];
      obs[d] = static_cast<float>(v + cfg.noise_sigma * gauss(rng));
    }

    const std::size_t a = t + 1 < n ? t : t - 1;
    const double dx = out.position[a + 1][0] - out.position[a][0];
    const double dy = out.position[a + 1][1] - out.position[a][1];
    auto act = out.traj.action_at(t);
    for (std::size_t k = 0; k < A; ++k)
      act[k] = static_cast<float>(act_proj[k][0] * dx + act_proj[k][1] * dy);
    out.traj.labels[t] = std::string(anomaly_name(out.track.tags[t]));
  }
  return out;
}

template <class T>
void insert_block(std::vector<T>& dst, std::size_t at, const std::vector<T>& src, std::size_t from,
                  std::size_t count) {
  dst.insert(dst.begin() + static_cast<std::ptrdiff_t>(at),
             src.begin() + static_cast<std::ptrdiff_t>(from),
             src.begin() + static_cast<std::ptrdiff_t>(from + count));
}

std::vector<std::vector<std::uint32_t>> chunk_group_table(
    const std::vector<std::string>& ids, const std::vector<std::size_t>& lengths,
    std::size_t chunk, const std::vector<DuplicateGroup>& groups) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::uint32_t>> table(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    index[ids[i]] = i;
    table[i].assign(lengths[i] / chunk, 0);
  }
  for (const auto& g : groups) {
    if (g.members.size() < 2) throw Error(Errc::CorruptBlob, "duplicate group with one member");
    for (const auto& m : g.members) {
      const auto it = index.find(m.traj_id);
      if (it == index.end() || m.start % chunk != 0 || m.start / chunk >= table[it->second].size())
        throw Error(Errc::CorruptBlob, "duplicate member outside the dataset: " + m.traj_id);
      table[it->second][m.start / chunk] = g.id;
    }
  }
  return table;
}

}  // namespace

Synthetic generate(const SynthConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t chunk = store::seconds_to_frames(cfg.chunk_seconds, cfg.fps);
  const std::size_t n_traj = cfg.num_traj;

  std::mt19937_64 global(derive_seed(cfg.seed, streams::kSynthGlobal));
  const Matrix q = projection(cfg.obs_dim, cfg.latent_dim(), global);
  Matrix act_proj(cfg.action_dim, std::vector<double>(2, 0.0));
  {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t k = 0; k < cfg.action_dim; ++k) {
      if (k < 2)
        act_proj[k][k] = 1.0;
      else
        act_proj[k] = {gauss(global) / std::sqrt(2.0), gauss(global) / std::sqrt(2.0)};
    }
  }

  // Exact per-type counts, spread over a seeded permutation of trajectories.
  std::vector<AnomalyType> assigned(n_traj, AnomalyType::Clean);
  {
    std::vector<std::size_t> perm(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), global);
    std::size_t next = 0;
    for (auto type : kAnomalyTypes) {
      const auto it = cfg.anomaly_rates.find(type);
      if (it == cfg.anomaly_rates.end()) continue;
      auto count = static_cast<std::size_t>(std::llround(it->second * static_cast<double>(n_traj)));
      count = std::min(count, n_traj - next);
      for (std::size_t c = 0; c < count; ++c) assigned[perm[next++]] = type;
    }
  }

  std::vector<TrajectoryDraw> draws(n_traj);
  parallel_for(n_traj, threads, [&](std::size_t i) {
    draws[i] = draw_trajectory(cfg, i, assigned[i], q, act_proj, chunk);
  });

  Synthetic out;
  auto& ds = out.dataset;
  auto& gt = out.truth;
  ds.obs_dim = cfg.obs_dim;
  ds.action_dim = cfg.action_dim;
  ds.meta["generator"] = "synthgen";
  ds.meta["seed"] = std::to_string(cfg.seed);
  gt.chunk_frames = chunk;
  for (auto& d : draws) {
    gt.traj_ids.push_back(d.traj.id);
    gt.tags.push_back(std::move(d.track.tags));
    gt.phase.push_back(std::move(d.track.phase));
    gt.position.push_back(std::move(d.position));
    ds.trajectories.push_back(std::move(d.traj));
  }

  // Planted duplicates: distinct source chunks from the generated frames,
  // each copied (with noise sigma / 10) onto the chunk grid at the end of a
  // different trajectory.
  const std::size_t slots_per_traj = cfg.frames_per_traj / chunk;
  const std::size_t n_slots = slots_per_traj * n_traj;
  const auto n_dups = static_cast<std::size_t>(
      std::llround(cfg.duplicate_rate * static_cast<double>(n_slots)));
  if (n_dups > 0 && n_traj < 2) throw Error(Errc::InvalidConfig, "duplicates need two trajectories");
  if (n_dups > 0) {
    std::mt19937_64 rng(derive_seed(cfg.seed, streams::kSynthDup));
    std::vector<std::size_t> slots(n_slots);
    for (std::size_t i = 0; i < n_slots; ++i) slots[i] = i;
    for (std::size_t i = 0; i < n_dups; ++i) {
      const auto j = std::uniform_int_distribution<std::size_t>(i, n_slots - 1)(rng);
      std::swap(slots[i], slots[j]);
    }
    std::sort(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(n_dups));

    const std::vector<store::Trajectory> originals = ds.trajectories;
    const auto orig_tags = gt.tags;
    const auto orig_phase = gt.phase;
    const auto orig_pos = gt.position;
    for (std::size_t d = 0; d < n_dups; ++d) {
      const std::size_t src = slots[d] / slots_per_traj;
      const std::size_t start = (slots[d] % slots_per_traj) * chunk;
      std::size_t dst = std::uniform_int_distribution<std::size_t>(0, n_traj - 2)(rng);
      if (dst >= src) ++dst;

      const auto& from = originals[src];
      auto& to = ds.trajectories[dst];
      const std::size_t at = (to.size() / chunk) * chunk;
      std::mt19937_64 noise_rng(derive_seed(cfg.seed, streams::kSynthDup, d + 1));
      std::normal_distribution<double> gauss(0.0, cfg.noise_sigma / 10.0);
      std::vector<float> obs(from.obs.begin() + static_cast<std::ptrdiff_t>(start * cfg.obs_dim),
                             from.obs.begin() + static_cast<std::ptrdiff_t>((start + chunk) * cfg.obs_dim));
      for (auto& v : obs) v = static_cast<float>(static_cast<double>(v) + gauss(noise_rng));
      insert_block(to.obs, at * cfg.obs_dim, obs, 0, obs.size());
      insert_block(to.actions, at * cfg.action_dim, from.actions, start * cfg.action_dim,
                   chunk * cfg.action_dim);
      insert_block(to.labels, at, from.labels, start, chunk);
      insert_block(gt.tags[dst], at, orig_tags[src], start, chunk);
      insert_block(gt.phase[dst], at, orig_phase[src], start, chunk);
      insert_block(gt.position[dst], at, orig_pos[src], start, chunk);

      DuplicateGroup g;
      g.id = static_cast<std::uint32_t>(d + 1);
      g.members.push_back({from.id, start, chunk});
      g.members.push_back({to.id, at, chunk});
      gt.groups.push_back(std::move(g));
    }
  }

  std::vector<std::size_t> lengths;
  for (const auto& t : ds.trajectories) lengths.push_back(t.size());
  gt.chunk_groups = chunk_group_table(gt.traj_ids, lengths, chunk, gt.groups);
  store::validate(ds);
  gt.self_check = run_self_check(ds, gt, cfg.seed);
  return out;
}

SelfCheck run_self_check(const store::Dataset& ds, const GroundTruth& gt, std::uint64_t seed,
                         double min_phase_gap, std::size_t max_pairs) {
  SelfCheck sc;
  const std::size_t W = gt.chunk_frames;
  if (W < 2 || ds.trajectories.empty()) return sc;
  const auto offsets = dedup::subsample_offsets(W, 8);
  std::vector<dedup::Chunk> chunks;
  std::vector<std::vector<std::size_t>> slot_index(ds.trajectories.size());
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
    const auto& traj = ds.trajectories[t];
    for (std::size_t start = 0; start + W <= traj.size(); start += W) {
      dedup::Chunk c;
      c.traj_index = t;
      c.traj_id = traj.id;
      c.start = start;
      c.span_frames = W;
      for (auto o : offsets) c.subsample.push_back(start + o);
      slot_index[t].push_back(chunks.size());
      chunks.push_back(std::move(c));
    }
  }
  if (chunks.empty()) return sc;
  const double lambda = dedup::auto_action_weight(ds, chunks);
  std::vector<std::vector<double>> emb(chunks.size());
  for (std::size_t c = 0; c < chunks.size(); ++c)
    emb[c] = dedup::embed_chunk(ds.trajectories[chunks[c].traj_index], chunks[c], lambda);
  auto cosine = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t k = 0; k < emb[a].size(); ++k) s += emb[a][k] * emb[b][k];
    return s;
  };

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) index[ds.trajectories[t].id] = t;
  for (const auto& g : gt.groups)
    for (std::size_t a = 0; a < g.members.size(); ++a)
      for (std::size_t b = a + 1; b < g.members.size(); ++b) {
        const auto& ma = g.members[a];
        const auto& mb = g.members[b];
        const auto ca = slot_index[index.at(ma.traj_id)][ma.start / W];
        const auto cb = slot_index[index.at(mb.traj_id)][mb.start / W];
        sc.min_duplicate_similarity = std::min(sc.min_duplicate_similarity, cosine(ca, cb));
      }

  if (gt.phase.size() != ds.trajectories.size()) return sc;
  std::vector<double> mean_phase(chunks.size(), 0.0);
  std::vector<std::uint8_t> planted(chunks.size(), 0);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const auto& ph = gt.phase[chunks[c].traj_index];
    for (std::size_t f = chunks[c].start; f < chunks[c].start + W; ++f) mean_phase[c] += ph[f];
    mean_phase[c] /= static_cast<double>(W);
    const auto& row = gt.chunk_groups[chunks[c].traj_index];
    planted[c] = row[chunks[c].start / W] != 0 ? 1 : 0;
  }
  std::mt19937_64 rng(derive_seed(seed, streams::kSynthGlobal, 1));
  std::uniform_int_distribution<std::size_t> pick(0, chunks.size() - 1);
  for (std::size_t attempt = 0; attempt < 20 * max_pairs && sc.cross_phase_pairs < max_pairs;
       ++attempt) {
    const auto a = pick(rng), b = pick(rng);
    if (planted[a] || planted[b]) continue;
    if (std::abs(mean_phase[a] - mean_phase[b]) < min_phase_gap) continue;
    sc.max_cross_phase_similarity = std::max(sc.max_cross_phase_similarity, cosine(a, b));
    ++sc.cross_phase_pairs;
  }
  return sc;
}

void save_synthetic(const Synthetic& synth, const fs::path& root) {
  store::save_dataset(synth.dataset, root);
  json j;
  j["format_version"] = 1;
  j["chunk_frames"] = synth.truth.chunk_frames;
  j["groups"] = json::array();
  for (const auto& g : synth.truth.groups) {
    json members = json::array();
    for (const auto& m : g.members)
      members.push_back({{"traj_id", m.traj_id}, {"start", m.start}, {"span", m.span}});
    j["groups"].push_back({{"id", g.id}, {"members", members}});
  }
  const auto& sc = synth.truth.self_check;
  j["self_check"] = {{"min_duplicate_similarity", sc.min_duplicate_similarity},
                     {"max_cross_phase_similarity", sc.max_cross_phase_similarity},
                     {"cross_phase_pairs", sc.cross_phase_pairs}};
  std::ofstream out(root / "duplicates.json", std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + (root / "duplicates.json").string());
  out << j.dump(2) << "\n";
}

GroundTruth load_ground_truth(const fs::path& root) {
  const auto ds = store::load_dataset(root);
  GroundTruth gt;
  std::vector<std::size_t> lengths;
  for (const auto& t : ds.trajectories) {
    if (t.labels.size() != t.size())
      throw Error(Errc::ShapeMismatch, "trajectory " + t.id + " has no per-frame labels");
    gt.traj_ids.push_back(t.id);
    std::vector<AnomalyType> tags;
    tags.reserve(t.labels.size());
    for (const auto& l : t.labels) tags.push_back(parse_anomaly(l));
    gt.tags.push_back(std::move(tags));
    lengths.push_back(t.size());
  }
  gt.chunk_frames = ds.trajectories.empty()
                        ? 0
                        : store::seconds_to_frames(2.0, ds.trajectories.front().fps);
  const fs::path dup_path = root / "duplicates.json";
  if (fs::exists(dup_path)) {
    std::ifstream in(dup_path);
    try {
      const json j = json::parse(in);
      gt.chunk_frames = j.at("chunk_frames").get<std::size_t>();
      for (const auto& g : j.at("groups")) {
        DuplicateGroup grp;
        grp.id = g.at("id").get<std::uint32_t>();
        for (const auto& m : g.at("members"))
          grp.members.push_back({m.at("traj_id").get<std::string>(), m.at("start").get<std::size_t>(),
                                 m.at("span").get<std::size_t>()});
        gt.groups.push_back(std::move(grp));
      }
      if (j.contains("self_check")) {
        const auto& sc = j.at("self_check");
        gt.self_check.min_duplicate_similarity = sc.at("min_duplicate_similarity").get<double>();
        gt.self_check.max_cross_phase_similarity = sc.at("max_cross_phase_similarity").get<double>();
        gt.self_check.cross_phase_pairs = sc.at("cross_phase_pairs").get<std::size_t>();
      }
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptBlob, dup_path.string() + ": " + e.what());
    }
  }
  if (gt.chunk_frames == 0) throw Error(Errc::CorruptBlob, "chunk_frames must be positive");
  gt.chunk_groups = chunk_group_table(gt.traj_ids, lengths, gt.chunk_frames, gt.groups);
  return gt;
}

}  // namespace trajcurate::synth
