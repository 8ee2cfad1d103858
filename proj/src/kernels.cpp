#include "trajcurate/kernels.hpp"

#include <algorithm>
#include <limits>

namespace trajcurate::kernels {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

namespace {

inline void assign_one(MatrixView points, MatrixView centroids, std::size_t i,
                       std::span<std::uint32_t> assign, std::span<double> dist2) {
  const auto p = points.row(i);
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t arg = 0;
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = squared_distance(p, centroids.row(c));
    if (d < best) {
      best = d;
      arg = static_cast<std::uint32_t>(c);
    }
  }
  assign[i] = arg;
  dist2[i] = best;
}

inline void max_cosine_group(MatrixView unit, const std::vector<std::size_t>& members,
                             std::span<double> out) {
  if (members.size() == 1) {
    out[members[0]] = -2.0;
    return;
  }
  for (std::size_t a = 0; a < members.size(); ++a) {
    const auto ua = unit.row(members[a]);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < members.size(); ++b) {
      if (a == b) continue;
      best = std::max(best, dot(ua, unit.row(members[b])));
    }
    out[members[a]] = best;
  }
}

inline void probs_one(const nn::MlpClassifier& model, MatrixView inputs, std::size_t i,
                      std::span<double> out) {
  const auto p = nn::forward(model, inputs.row(i));
  std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(i * p.size()));
}

}  // namespace

void assign_nearest_serial(MatrixView points, MatrixView centroids,
                           std::span<std::uint32_t> assign, std::span<double> dist2) {
  for (std::size_t i = 0; i < points.rows; ++i) assign_one(points, centroids, i, assign, dist2);
}

void assign_nearest_omp(MatrixView points, MatrixView centroids,
                        std::span<std::uint32_t> assign, std::span<double> dist2, int threads) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    assign_one(points, centroids, static_cast<std::size_t>(i), assign, dist2);
}

void max_cosine_in_groups_serial(MatrixView unit,
                                 const std::vector<std::vector<std::size_t>>& groups,
                                 std::span<double> out) {
  for (const auto& g : groups)
    if (!g.empty()) max_cosine_group(unit, g, out);
}

void max_cosine_in_groups_omp(MatrixView unit,
                              const std::vector<std::vector<std::size_t>>& groups,
                              std::span<double> out, int threads) {
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (std::ptrdiff_t g = 0; g < n; ++g)
    if (!groups[static_cast<std::size_t>(g)].empty())
      max_cosine_group(unit, groups[static_cast<std::size_t>(g)], out);
}

void mlp_probs_serial(const nn::MlpClassifier& model, MatrixView inputs, std::span<double> out) {
  for (std::size_t i = 0; i < inputs.rows; ++i) probs_one(model, inputs, i, out);
}

void mlp_probs_omp(const nn::MlpClassifier& model, MatrixView inputs, std::span<double> out,
                   int threads) {
  const auto n = static_cast<std::ptrdiff_t>(inputs.rows);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    probs_one(model, inputs, static_cast<std::size_t>(i), out);
}

}  // namespace trajcurate::kernels
