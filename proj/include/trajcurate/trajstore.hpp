#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace trajcurate::store {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr char kBlobMagic[4] = {'T', 'R', 'J', 'C'};
inline constexpr std::size_t kBlobHeaderBytes = 12;

/// Non-owning view of one (observation embedding, action) transition.
struct FrameView {
  std::size_t index = 0;
  std::span<const float> obs;
  std::span<const float> action;
};

/// One demonstration. Frames are stored row-major in two flat arrays so a
/// trajectory maps 1:1 onto its on-disk blob.
struct Trajectory {
  std::string id;
  double fps = 0.0;
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::vector<float> obs;      // size() x obs_dim
  std::vector<float> actions;  // size() x action_dim
  std::vector<std::string> labels;  // empty, or one tag per frame

  Trajectory() = default;
  Trajectory(std::string id_, double fps_, std::size_t obs_dim_,
             std::size_t action_dim_)
      : id(std::move(id_)), fps(fps_), obs_dim(obs_dim_),
        action_dim(action_dim_) {}

  std::size_t size() const { return obs_dim == 0 ? 0 : obs.size() / obs_dim; }
  bool empty() const { return size() == 0; }
  double duration() const { return static_cast<double>(size()) / fps; }
  double time_of(std::size_t i) const { return static_cast<double>(i) / fps; }

  std::span<const float> obs_at(std::size_t i) const {
    return {obs.data() + i * obs_dim, obs_dim};
  }
  std::span<float> obs_at(std::size_t i) {
    return {obs.data() + i * obs_dim, obs_dim};
  }
  std::span<const float> action_at(std::size_t i) const {
    return {actions.data() + i * action_dim, action_dim};
  }
  std::span<float> action_at(std::size_t i) {
    return {actions.data() + i * action_dim, action_dim};
  }
  FrameView frame(std::size_t i) const { return {i, obs_at(i), action_at(i)}; }

  void push_frame(std::span<const float> o, std::span<const float> a);

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::map<std::string, std::string> meta;

  std::size_t total_frames() const;
  const Trajectory* find(const std::string& id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Window {
  std::string traj_id;
  std::size_t start = 0;
  std::size_t span_frames = 0;
  double span_seconds = 0.0;
};

/// Checks every Dataset/Trajectory invariant, throwing trajcurate::Error.
void validate(const Dataset& ds);

/// Reads `<root>/manifest.json` and `<root>/trajectories/<id>.bin`.
/// Blobs are decoded in parallel when threads > 1.
Dataset load_dataset(const std::filesystem::path& root, int threads = 1);

void save_dataset(const Dataset& ds, const std::filesystem::path& root);

/// Blob codec, exposed for tools and tests.
std::string encode_blob(const Trajectory& traj);
void decode_blob(std::string_view bytes, Trajectory& traj);

/// round(seconds * fps), never less than one frame.
std::size_t seconds_to_frames(double seconds, double fps);

std::size_t window_count(std::size_t len, std::size_t span, std::size_t stride);

std::vector<Window> sliding_windows(const Trajectory& traj, double span_seconds,
                                    std::size_t stride_frames);

/// Trajectory ids double as file names.
bool is_valid_id(const std::string& id);

}  // namespace trajcurate::store
