#include "trajcurate/dedup.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "trajcurate/error.hpp"
#include "trajcurate/parallel.hpp"

namespace trajcurate::dedup {

void DedupConfig::validate() const {
  if (!(chunk_seconds > 0.0)) throw Error(Errc::InvalidConfig, "chunk_seconds must be positive");
  if (n_subsample < 2) throw Error(Errc::InvalidConfig, "n_subsample must be >= 2");
  if (k == 0 && target_cluster_size == 0)
    throw Error(Errc::InvalidConfig, "target_cluster_size must be positive");
  if (action_weight && !(*action_weight >= 0.0))
    throw Error(Errc::InvalidConfig, "action_weight must be non-negative");
  if (std::isnan(epsilon_d)) throw Error(Errc::InvalidConfig, "epsilon_d is NaN");
  if (max_iters == 0) throw Error(Errc::InvalidConfig, "max_iters must be positive");
}

std::vector<std::size_t> subsample_offsets(std::size_t span, std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = n == 1 ? 0 : i * (span - 1) / (n - 1);
  return out;
}

std::vector<Chunk> chunk_dataset(const store::Dataset& ds, const DedupConfig& cfg) {
  std::vector<Chunk> chunks;
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
    const auto& traj = ds.trajectories[t];
    const std::size_t W = store::seconds_to_frames(cfg.chunk_seconds, traj.fps);
    const auto offsets = subsample_offsets(W, cfg.n_subsample);
    for (std::size_t start = 0; start + W <= traj.size(); start += W) {
      Chunk c;
      c.traj_index = t;
      c.traj_id = traj.id;
      c.start = start;
      c.span_frames = W;
      c.subsample.reserve(offsets.size());
      for (auto o : offsets) c.subsample.push_back(start + o);
      chunks.push_back(std::move(c));
    }
  }
  return chunks;
}

namespace {

std::size_t visual_dim(std::size_t D, std::size_t N) { return D * N; }

double normalize(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double norm = std::sqrt(s);
  if (norm > 0.0)
    for (auto& x : v) x /= norm;
  return norm;
}

}  // namespace

std::vector<double> raw_chunk_feature(const store::Trajectory& traj, const Chunk& chunk,
                                      double action_weight) {
  const std::size_t D = traj.obs_dim, A = traj.action_dim, N = chunk.subsample.size();
  if (N < 2) throw Error(Errc::DimensionMismatch, "chunk needs at least two subsampled frames");
  for (auto f : chunk.subsample)
    if (f >= traj.size()) throw Error(Errc::DimensionMismatch, "chunk frame outside " + traj.id);

  std::vector<double> z(visual_dim(D, N) + N * A, 0.0);
  // mean embedding
  for (auto f : chunk.subsample) {
    const auto o = traj.obs_at(f);
    for (std::size_t k = 0; k < D; ++k) z[k] += o[k];
  }
  for (std::size_t k = 0; k < D; ++k) z[k] /= static_cast<double>(N);
  // temporal differences
  for (std::size_t s = 0; s + 1 < N; ++s) {
    const auto a = traj.obs_at(chunk.subsample[s]);
    const auto b = traj.obs_at(chunk.subsample[s + 1]);
    double* dst = z.data() + D * (1 + s);
    for (std::size_t k = 0; k < D; ++k) dst[k] = static_cast<double>(b[k]) - static_cast<double>(a[k]);
  }
  // actions at the same subsampled frames
  double* act = z.data() + visual_dim(D, N);
  for (std::size_t s = 0; s < N; ++s) {
    const auto a = traj.action_at(chunk.subsample[s]);
    for (std::size_t k = 0; k < A; ++k) act[s * A + k] = action_weight * static_cast<double>(a[k]);
  }
  return z;
}

std::vector<double> embed_chunk(const store::Trajectory& traj, Chunk& chunk, double action_weight) {
  auto z = raw_chunk_feature(traj, chunk, action_weight);
  chunk.norm = normalize(z);
  return z;
}

double auto_action_weight(const store::Dataset& ds, const std::vector<Chunk>& chunks) {
  if (chunks.empty() || ds.action_dim == 0) return 1.0;
  const std::size_t N = chunks.front().subsample.size();
  const std::size_t vdim = visual_dim(ds.obs_dim, N);
  double vsum = 0.0, asum = 0.0;
  std::size_t vcount = 0, acount = 0;
  for (const auto& c : chunks) {
    const auto z = raw_chunk_feature(ds.trajectories[c.traj_index], c, 1.0);
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k < vdim) {
        vsum += z[k] * z[k];
        ++vcount;
      } else {
        asum += z[k] * z[k];
        ++acount;
      }
    }
  }
  const double vrms = std::sqrt(vsum / static_cast<double>(vcount));
  const double arms = std::sqrt(asum / static_cast<double>(acount));
  return arms > 0.0 ? vrms / arms : 1.0;
}

std::size_t choose_k(std::size_t num_chunks, const DedupConfig& cfg) {
  if (cfg.k > 0) return cfg.k;
  const double k = std::round(static_cast<double>(num_chunks) / static_cast<double>(cfg.target_cluster_size));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

std::vector<double> similarity_scores(const ClusterModel& model, kernels::MatrixView unit,
                                      int threads) {
  std::vector<double> out(unit.rows, kSingletonSimilarity);
  kernels::max_cosine_in_groups(unit, model.members(), out, threads);
  return out;
}

DuplicateIndex::DuplicateIndex(const std::vector<Chunk>& chunks, kernels::MatrixView unit,
                               const ClusterModel& model, int threads)
    : num_chunks_(chunks.size()) {
  if (unit.rows != chunks.size() || model.assignment.size() != chunks.size())
    throw Error(Errc::ShapeMismatch, "chunks, features and clustering disagree in size");
  scores_ = similarity_scores(model, unit, threads);
  const auto members = model.members();
  clusters_.resize(members.size());
  parallel_for(members.size(), threads, [&](std::size_t c) {
    auto& cl = clusters_[c];
    const auto centroid = model.centroid(c);
    std::vector<std::pair<double, std::size_t>> keyed;
    for (auto i : members[c]) keyed.emplace_back(kernels::squared_distance(unit.row(i), centroid), i);
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      const auto& ca = chunks[a.second];
      const auto& cb = chunks[b.second];
      if (ca.traj_id != cb.traj_id) return ca.traj_id < cb.traj_id;
      return ca.start < cb.start;
    });
    for (const auto& kv : keyed) cl.order.push_back(kv.second);
    const std::size_t m = cl.order.size();
    cl.sim.assign(m * m, 1.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) {
        const double s = kernels::dot(unit.row(cl.order[a]), unit.row(cl.order[b]));
        cl.sim[a * m + b] = s;
        cl.sim[b * m + a] = s;
      }
  });
}

std::vector<double> DuplicateIndex::pair_similarities() const {
  std::vector<double> out;
  for (const auto& cl : clusters_) {
    const std::size_t m = cl.order.size();
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) out.push_back(cl.sim[a * m + b]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint8_t> DuplicateIndex::chunk_drops(double epsilon_d, bool drop_all) const {
  std::vector<std::uint8_t> drop(num_chunks_, 0);
  if (drop_all) {
    for (std::size_t i = 0; i < num_chunks_; ++i) drop[i] = scores_[i] > epsilon_d ? 1 : 0;
    return drop;
  }
  for (const auto& cl : clusters_) {
    const std::size_t m = cl.order.size();
    // union-find over visit positions; the root is always the smallest position
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b)
        if (cl.sim[a * m + b] > epsilon_d) {
          const auto ra = find(a), rb = find(b);
          if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
    for (std::size_t a = 0; a < m; ++a)
      if (find(a) != a) drop[cl.order[a]] = 1;
  }
  return drop;
}

std::vector<std::uint8_t> duplicate_mask(const std::vector<Chunk>& chunks, kernels::MatrixView unit,
                                         const ClusterModel& model, double epsilon_d,
                                         bool drop_all_over_threshold, int threads) {
  return DuplicateIndex(chunks, unit, model, threads).chunk_drops(epsilon_d, drop_all_over_threshold);
}

std::vector<std::vector<std::uint8_t>> frame_drops(const store::Dataset& ds,
                                                   const std::vector<Chunk>& chunks,
                                                   std::span<const std::uint8_t> chunk_drop) {
  std::vector<std::vector<std::uint8_t>> out(ds.trajectories.size());
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t)
    out[t].assign(ds.trajectories[t].size(), 0);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    if (!chunk_drop[c]) continue;
    auto& f = out[chunks[c].traj_index];
    std::fill(f.begin() + static_cast<std::ptrdiff_t>(chunks[c].start),
              f.begin() + static_cast<std::ptrdiff_t>(chunks[c].start + chunks[c].span_frames), 1);
  }
  return out;
}

double DedupResult::deletion_ratio() const {
  return total_frames == 0 ? 0.0 : static_cast<double>(dropped_frames) / static_cast<double>(total_frames);
}

double DedupResult::chunked_deletion_ratio() const {
  return chunked_frames == 0 ? 0.0
                             : static_cast<double>(dropped_frames) / static_cast<double>(chunked_frames);
}

void apply_threshold(DedupResult& r, const store::Dataset& ds, double epsilon_d, bool drop_all,
                     int threads) {
  if (r.chunks.empty()) {
    r.chunk_drop.clear();
  } else {
    r.chunk_drop = DuplicateIndex(r.chunks, r.feature_view(), r.clusters, threads)
                       .chunk_drops(epsilon_d, drop_all);
  }
  r.frame_drop = frame_drops(ds, r.chunks, r.chunk_drop);
  r.dropped_frames = 0;
  for (const auto& f : r.frame_drop)
    r.dropped_frames += static_cast<std::size_t>(std::count(f.begin(), f.end(), std::uint8_t{1}));
}

DedupResult dedup_dataset(const store::Dataset& ds, const DedupConfig& cfg, int threads,
                          const std::optional<std::filesystem::path>& embeddings) {
  cfg.validate();
  DedupResult r;
  r.chunks = chunk_dataset(ds, cfg);
  r.total_frames = ds.total_frames();
  for (const auto& c : r.chunks) r.chunked_frames += c.span_frames;
  const std::size_t n = r.chunks.size();

  if (embeddings && std::filesystem::exists(*embeddings)) {
    std::size_t count = 0, dim = 0;
    r.features = load_chunk_embeddings(*embeddings, count, dim);
    if (count != n)
      throw Error(Errc::DimensionMismatch, "chunk_embeddings.bin has " + std::to_string(count) +
                                               " rows for " + std::to_string(n) + " chunks");
    r.feature_dim = dim;
    r.action_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      r.chunks[i].norm = normalize({r.features.data() + i * dim, dim});
  } else {
    r.action_weight = cfg.action_weight ? *cfg.action_weight : auto_action_weight(ds, r.chunks);
    r.feature_dim = ds.obs_dim * cfg.n_subsample + ds.action_dim * cfg.n_subsample;
    r.features.assign(n * r.feature_dim, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
      auto& c = r.chunks[i];
      const auto z = embed_chunk(ds.trajectories[c.traj_index], c, r.action_weight);
      std::copy(z.begin(), z.end(), r.features.begin() + static_cast<std::ptrdiff_t>(i * r.feature_dim));
    });
  }

  if (n == 0) {
    r.frame_drop = frame_drops(ds, r.chunks, r.chunk_drop);
    return r;
  }
  const std::size_t k = choose_k(n, cfg);
  r.clusters = kmeans(r.feature_view(), k, cfg.seed, cfg.max_iters, threads);
  const DuplicateIndex index(r.chunks, r.feature_view(), r.clusters, threads);
  r.scores = index.scores();
  r.chunk_drop = index.chunk_drops(cfg.epsilon_d, cfg.drop_all_over_threshold);
  r.frame_drop = frame_drops(ds, r.chunks, r.chunk_drop);
  for (const auto& f : r.frame_drop)
    r.dropped_frames += static_cast<std::size_t>(std::count(f.begin(), f.end(), std::uint8_t{1}));
  return r;
}

void save_chunk_embeddings(const std::filesystem::path& path, std::span<const double> rows,
                           std::size_t count, std::size_t dim) {
  if (rows.size() != count * dim) throw Error(Errc::ShapeMismatch, "embedding rows");
  std::string bytes(kEmbeddingMagic, 4);
  auto put = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
  };
  put(static_cast<std::uint32_t>(count));
  put(static_cast<std::uint32_t>(dim));
  for (double v : rows) put(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> load_chunk_embeddings(const std::filesystem::path& path, std::size_t& count,
                                          std::size_t& dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  auto get = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + b])) << (8 * b);
    return v;
  };
  if (bytes.size() < 12 || bytes.compare(0, 4, kEmbeddingMagic, 4) != 0)
    throw Error(Errc::CorruptBlob, path.string() + ": not a CEMB file");
  count = get(4);
  dim = get(8);
  if (bytes.size() != 12 + 4 * count * dim) throw Error(Errc::TruncatedBlob, path.string());
  std::vector<double> rows(count * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = static_cast<double>(std::bit_cast<float>(get(12 + 4 * i)));
    if (!std::isfinite(rows[i])) throw Error(Errc::NonFiniteValue, path.string());
  }
  return rows;
}

}  // namespace trajcurate::dedup
