#pragma once

// Brute-force reference evaluations written directly from the scoring
// formulas, sharing no code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "trajcurate/tinynn.hpp"
#include "trajcurate/trajstore.hpp"

namespace oracle {

/// ReLU MLP with softmax, evaluated with explicit loops.
inline std::vector<double> mlp_forward(const trajcurate::nn::MlpClassifier& m,
                                       const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    std::vector<double> z(L.out);
    for (std::size_t j = 0; j < L.out; ++j) {
      double s = L.bias[j];
      for (std::size_t i = 0; i < L.in; ++i) s += a[i] * L.weights[i * L.out + j];
      z[j] = (l + 1 < m.layers.size()) ? std::max(0.0, s) : s;
    }
    a = z;
  }
  double mx = a[0];
  for (double v : a) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : a) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : a) v /= sum;
  return a;
}

struct Series {
  std::vector<double> window, sample, discounted, mixed;
};

/// Window score T - sum_b p_b r_b on the first and last frame of each
/// W-frame window; V-hat as the plain mean over windows starting in
/// [i - W, i]; V_i = sum_{t <= i} gamma^(i - t) V-hat_t; final as the
/// w-blend with the trajectory mean of V.
inline Series subopt_series(const trajcurate::nn::MlpClassifier& m,
                            const std::vector<double>& reps,
                            const trajcurate::store::Trajectory& traj, std::size_t W,
                            double window_seconds, double gamma, double w) {
  Series s;
  const std::size_t n = traj.size();
  const std::size_t nw = n >= W ? n - W + 1 : 0;
  for (std::size_t start = 0; start < nw; ++start) {
    std::vector<double> d(traj.obs_dim);
    for (std::size_t k = 0; k < traj.obs_dim; ++k)
      d[k] = static_cast<double>(traj.obs[(start + W - 1) * traj.obs_dim + k]) -
             static_cast<double>(traj.obs[start * traj.obs_dim + k]);
    const auto p = mlp_forward(m, d);
    double tp = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) tp += p[b] * reps[b];
    s.window.push_back(window_seconds - tp);
  }
  s.sample.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t start = 0; start < nw; ++start) {
      const long lo = static_cast<long>(i) - static_cast<long>(W);
      if (static_cast<long>(start) >= lo && start <= i) {
        sum += s.window[start];
        ++count;
      }
    }
    s.sample[i] = count > 0 ? sum / count : 0.0;
  }
  s.discounted.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t t = 0; t <= i; ++t) v += std::pow(gamma, static_cast<double>(i - t)) * s.sample[t];
    s.discounted[i] = v;
  }
  double mean = 0.0;
  for (double v : s.discounted) mean += v;
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) s.mixed.push_back(w * mean + (1.0 - w) * s.discounted[i]);
  return s;
}

/// |a - b| <= tol * max(1, |a|, |b|).
inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool all_close(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i], tol)) return false;
  return true;
}

/// Exhaustive in-cluster maximum cosine; -2 for singletons.
inline std::vector<double> max_cosine(const std::vector<double>& rows, std::size_t dim,
                                      const std::vector<std::uint32_t>& assignment) {
  const std::size_t n = assignment.size();
  std::vector<double> out(n, -2.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || assignment[i] != assignment[j]) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        dot += rows[i * dim + k] * rows[j * dim + k];
        ni += rows[i * dim + k] * rows[i * dim + k];
        nj += rows[j * dim + k] * rows[j * dim + k];
      }
      out[i] = std::max(out[i], dot / std::sqrt(ni * nj));
    }
  return out;
}

}  // namespace oracle
