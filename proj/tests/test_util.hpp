#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "trajcurate/synthgen.hpp"
#include "trajcurate/tinynn.hpp"
#include "trajcurate/trajstore.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("trajcurate_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

/// Gaussian observations and actions; lengths uniform in [min_len, max_len].
inline trajcurate::store::Dataset random_dataset(std::size_t n_traj, std::size_t min_len,
                                                 std::size_t max_len, std::size_t obs_dim,
                                                 std::size_t action_dim, std::uint64_t seed,
                                                 double fps = 10.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  trajcurate::store::Dataset ds;
  ds.obs_dim = obs_dim;
  ds.action_dim = action_dim;
  for (std::size_t t = 0; t < n_traj; ++t) {
    trajcurate::store::Trajectory tr("t" + std::to_string(1000 + t), fps, obs_dim, action_dim);
    const std::size_t n = len(rng);
    tr.obs.resize(n * obs_dim);
    tr.actions.resize(n * action_dim);
    for (auto& v : tr.obs) v = g(rng);
    for (auto& v : tr.actions) v = g(rng);
    ds.trajectories.push_back(std::move(tr));
  }
  return ds;
}

/// A small synthetic benchmark that trains in seconds.
inline trajcurate::synth::SynthConfig small_synth(std::uint64_t seed = 0) {
  trajcurate::synth::SynthConfig c;
  c.num_traj = 40;
  c.frames_per_traj = 200;
  c.seed = seed;
  return c;
}

}  // namespace testutil
