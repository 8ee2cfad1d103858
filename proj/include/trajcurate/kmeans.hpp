#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trajcurate/kernels.hpp"

namespace trajcurate::dedup {

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim
  std::vector<std::uint32_t> assignment;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after every assignment step
  std::size_t iterations = 0;
  bool converged = false;

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }
  /// Member indices per cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;
};

/// Seeded k-means++ followed by Lloyd iterations until the assignment stops
/// changing or max_iters updates have run. An empty cluster is re-seeded with
/// the point farthest from its centroid. The assignment step is the only
/// parallel part; centroid sums run serially in point order, so the result
/// does not depend on `threads`.
ClusterModel kmeans(kernels::MatrixView points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100, int threads = 1);

}  // namespace trajcurate::dedup
