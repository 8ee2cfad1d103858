#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajcurate/kmeans.hpp"
#include "trajcurate/trajstore.hpp"

namespace trajcurate::dedup {

inline constexpr char kEmbeddingMagic[4] = {'C', 'E', 'M', 'B'};
inline constexpr double kSingletonSimilarity = -2.0;

struct DedupConfig {
  double chunk_seconds = 2.0;
  std::size_t n_subsample = 8;
  /// k = max(1, round(num_chunks / target_cluster_size)) unless k is set.
  std::size_t target_cluster_size = 50;
  std::size_t k = 0;
  /// Scale of the action block. Unset: match the visual block's RMS.
  std::optional<double> action_weight;
  double epsilon_d = 0.99;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  /// Literal reading: drop every chunk whose similarity exceeds epsilon_d,
  /// instead of keeping one representative per duplicate group.
  bool drop_all_over_threshold = false;

  void validate() const;
};

struct Chunk {
  std::size_t traj_index = 0;
  std::string traj_id;
  std::size_t start = 0;
  std::size_t span_frames = 0;
  std::vector<std::size_t> subsample;  // absolute frame indices
  double norm = 0.0;                   // feature norm before normalization
};

/// Uniformly spaced offsets in [0, span): floor(i * (span - 1) / (n - 1)).
std::vector<std::size_t> subsample_offsets(std::size_t span_frames, std::size_t n);

/// Non-overlapping chunks tiling every trajectory from frame 0; a tail shorter
/// than one chunk is left out.
std::vector<Chunk> chunk_dataset(const store::Dataset& ds, const DedupConfig& cfg);

/// Unnormalized joint feature: [mean obs, consecutive obs differences,
/// action_weight * actions], all over the subsampled frames.
std::vector<double> raw_chunk_feature(const store::Trajectory& traj, const Chunk& chunk,
                                      double action_weight);

/// raw_chunk_feature scaled to unit length (zero stays zero). Stores the
/// pre-normalization norm in chunk.norm.
std::vector<double> embed_chunk(const store::Trajectory& traj, Chunk& chunk, double action_weight);

/// Visual-block RMS over action-block RMS across all chunks.
double auto_action_weight(const store::Dataset& ds, const std::vector<Chunk>& chunks);

std::size_t choose_k(std::size_t num_chunks, const DedupConfig& cfg);

/// Max cosine similarity to another chunk of the same cluster, or -2 for
/// singleton clusters. Rows of `unit` must be L2-normalized.
std::vector<double> similarity_scores(const ClusterModel& model, kernels::MatrixView unit,
                                      int threads = 1);

/// Per-cluster duplicate structure, built once and re-thresholded cheaply.
/// Members are visited in descending distance from their centroid (ties by
/// trajectory id, then start). For a threshold, chunks linked by similarity
/// above it form duplicate groups; the first-visited member of each group is
/// kept and the rest dropped. Lowering the threshold only merges groups, so
/// drop sets grow monotonically as the threshold falls.
class DuplicateIndex {
 public:
  DuplicateIndex(const std::vector<Chunk>& chunks, kernels::MatrixView unit,
                 const ClusterModel& model, int threads = 1);

  std::vector<std::uint8_t> chunk_drops(double epsilon_d, bool drop_all_over_threshold = false) const;
  const std::vector<double>& scores() const { return scores_; }
  /// Sorted distinct in-cluster pairwise similarities: the only thresholds at
  /// which the drop set can change.
  std::vector<double> pair_similarities() const;

 private:
  struct Cluster {
    std::vector<std::size_t> order;  // chunk indices in visit order
    std::vector<double> sim;         // order.size()^2 cosine matrix
  };
  std::vector<Cluster> clusters_;
  std::vector<double> scores_;
  std::size_t num_chunks_ = 0;
};

std::vector<std::uint8_t> duplicate_mask(const std::vector<Chunk>& chunks, kernels::MatrixView unit,
                                         const ClusterModel& model, double epsilon_d,
                                         bool drop_all_over_threshold = false, int threads = 1);

/// Expands chunk decisions to per-frame flags (tail frames never drop).
std::vector<std::vector<std::uint8_t>> frame_drops(const store::Dataset& ds,
                                                   const std::vector<Chunk>& chunks,
                                                   std::span<const std::uint8_t> chunk_drop);

struct DedupResult {
  std::vector<Chunk> chunks;
  std::size_t feature_dim = 0;
  std::vector<double> features;  // unit rows, chunks.size() x feature_dim
  double action_weight = 0.0;
  ClusterModel clusters;
  std::vector<double> scores;
  std::vector<std::uint8_t> chunk_drop;
  std::vector<std::vector<std::uint8_t>> frame_drop;
  std::size_t dropped_frames = 0;
  std::size_t chunked_frames = 0;
  std::size_t total_frames = 0;

  kernels::MatrixView feature_view() const { return {features.data(), chunks.size(), feature_dim}; }
  double deletion_ratio() const;
  double chunked_deletion_ratio() const;
};

/// chunk -> embed -> cluster -> score -> mask. When `embeddings` names an
/// existing file its rows replace the built-in chunk embedder.
DedupResult dedup_dataset(const store::Dataset& ds, const DedupConfig& cfg, int threads = 1,
                          const std::optional<std::filesystem::path>& embeddings = std::nullopt);

/// Re-thresholds an existing result in place.
void apply_threshold(DedupResult& result, const store::Dataset& ds, double epsilon_d,
                     bool drop_all_over_threshold = false, int threads = 1);

/// `<root>/chunk_embeddings.bin`: "CEMB", u32 count, u32 dim, count*dim f32 LE.
void save_chunk_embeddings(const std::filesystem::path& path, std::span<const double> rows,
                           std::size_t count, std::size_t dim);
std::vector<double> load_chunk_embeddings(const std::filesystem::path& path, std::size_t& count,
                                          std::size_t& dim);

}  // namespace trajcurate::dedup
