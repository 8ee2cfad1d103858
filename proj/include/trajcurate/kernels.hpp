#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference and an
// OpenMP version; the two produce bitwise-identical output because each output
// element is computed by exactly one iteration in a fixed order. Tests compare
// them directly and bench/ times them against each other.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trajcurate/tinynn.hpp"

namespace trajcurate::kernels {

/// Read-only row-major matrix.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return {data + i * cols, cols}; }
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

/// Nearest centroid per point (lowest index wins ties) and its squared
/// Euclidean distance.
void assign_nearest_serial(MatrixView points, MatrixView centroids,
                           std::span<std::uint32_t> assign, std::span<double> dist2);
void assign_nearest_omp(MatrixView points, MatrixView centroids,
                        std::span<std::uint32_t> assign, std::span<double> dist2, int threads);

/// For every member of every group: the largest dot product with another
/// member of the same group; -2 for members of singleton groups. Rows are
/// expected to be unit vectors, making the dot product a cosine.
void max_cosine_in_groups_serial(MatrixView unit,
                                 const std::vector<std::vector<std::size_t>>& groups,
                                 std::span<double> out);
void max_cosine_in_groups_omp(MatrixView unit,
                              const std::vector<std::vector<std::size_t>>& groups,
                              std::span<double> out, int threads);

/// Class probabilities for every input row; out is rows x classes.
void mlp_probs_serial(const nn::MlpClassifier& model, MatrixView inputs, std::span<double> out);
void mlp_probs_omp(const nn::MlpClassifier& model, MatrixView inputs, std::span<double> out,
                   int threads);

inline void assign_nearest(MatrixView points, MatrixView centroids,
                           std::span<std::uint32_t> assign, std::span<double> dist2,
                           int threads) {
  if (threads <= 1)
    assign_nearest_serial(points, centroids, assign, dist2);
  else
    assign_nearest_omp(points, centroids, assign, dist2, threads);
}

inline void max_cosine_in_groups(MatrixView unit,
                                 const std::vector<std::vector<std::size_t>>& groups,
                                 std::span<double> out, int threads) {
  if (threads <= 1)
    max_cosine_in_groups_serial(unit, groups, out);
  else
    max_cosine_in_groups_omp(unit, groups, out, threads);
}

inline void mlp_probs(const nn::MlpClassifier& model, MatrixView inputs, std::span<double> out,
                      int threads) {
  if (threads <= 1)
    mlp_probs_serial(model, inputs, out);
  else
    mlp_probs_omp(model, inputs, out, threads);
}

}  // namespace trajcurate::kernels
