#include "trajcurate/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "trajcurate/error.hpp"
#include "trajcurate/rng.hpp"

namespace trajcurate::dedup {

std::vector<std::vector<std::size_t>> ClusterModel::members() const {
  std::vector<std::vector<std::size_t>> m(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) m[assignment[i]].push_back(i);
  return m;
}

namespace {

std::vector<double> plus_plus_init(kernels::MatrixView pts, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, streams::kKmeans));
  const std::size_t n = pts.rows, dim = pts.cols;
  std::vector<double> cent(k * dim);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0;; ++c) {
    chosen[pick] = true;
    const auto p = pts.row(pick);
    std::copy(p.begin(), p.end(), cent.begin() + static_cast<std::ptrdiff_t>(c * dim));
    if (c + 1 == k) break;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(pts.row(i), p));
      total += d2[i];
    }
    if (total > 0.0) {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
      if (pick == n)  // r landed on the rounding slack at the very end
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      // every point coincides with a centre already; take the next unused one
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
  }
  return cent;
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

ClusterModel kmeans(kernels::MatrixView pts, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters, int threads) {
  if (pts.rows == 0) throw Error(Errc::EmptyInput, "kmeans on zero points");
  if (k == 0 || k > pts.rows)
    throw Error(Errc::KTooLarge, "k=" + std::to_string(k) + " for " + std::to_string(pts.rows) + " points");

  const std::size_t n = pts.rows, dim = pts.cols;
  ClusterModel m;
  m.k = k;
  m.dim = dim;
  m.centroids = plus_plus_init(pts, k, seed);

  std::vector<std::uint32_t> assign(n), next(n);
  std::vector<double> d2(n);
  kernels::assign_nearest(pts, {m.centroids.data(), k, dim}, assign, d2, threads);
  m.inertia_history.push_back(sum(d2));

  std::vector<std::size_t> count(k);
  while (m.iterations < max_iters) {
    std::fill(count.begin(), count.end(), 0);
    for (auto a : assign) ++count[a];

    // Re-seed empty clusters with the farthest point of a multi-member cluster.
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (count[assign[i]] > 1 && d2[i] > 0.0 && (far == n || d2[i] > d2[far])) far = i;
      if (far == n) break;  // all remaining points sit exactly on a centroid
      --count[assign[far]];
      assign[far] = static_cast<std::uint32_t>(c);
      count[c] = 1;
      d2[far] = 0.0;
      const auto p = pts.row(far);
      std::copy(p.begin(), p.end(), m.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }

    // Centroid update in point order.
    std::vector<double> acc(k * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = pts.row(i);
      double* dst = acc.data() + assign[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) dst[j] += p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(count[c]);
      for (std::size_t j = 0; j < dim; ++j) m.centroids[c * dim + j] = acc[c * dim + j] * inv;
    }

    kernels::assign_nearest(pts, {m.centroids.data(), k, dim}, next, d2, threads);
    m.inertia_history.push_back(sum(d2));
    ++m.iterations;
    const bool same = next == assign;
    assign.swap(next);
    if (same) {
      m.converged = true;
      break;
    }
  }
  m.assignment = std::move(assign);
  m.inertia = m.inertia_history.back();
  return m;
}

}  // namespace trajcurate::dedup
