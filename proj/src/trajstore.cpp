#include "trajcurate/trajstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trajcurate/error.hpp"
#include "trajcurate/parallel.hpp"

namespace trajcurate::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return v;
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

void check_finite(const Trajectory& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (float v : t.obs_at(i))
      if (!std::isfinite(v))
        throw Error(Errc::NonFiniteValue, t.id + " frame " + std::to_string(i));
    for (float v : t.action_at(i))
      if (!std::isfinite(v))
        throw Error(Errc::NonFiniteValue, t.id + " frame " + std::to_string(i));
  }
}

}  // namespace

void Trajectory::push_frame(std::span<const float> o, std::span<const float> a) {
  if (o.size() != obs_dim || a.size() != action_dim)
    throw Error(Errc::DimensionMismatch, id);
  obs.insert(obs.end(), o.begin(), o.end());
  actions.insert(actions.end(), a.begin(), a.end());
}

std::size_t Dataset::total_frames() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

const Trajectory* Dataset::find(const std::string& id) const {
  for (const auto& t : trajectories)
    if (t.id == id) return &t;
  return nullptr;
}

bool is_valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id)
    if (c == '/' || c == '\\' || c == '\0') return false;
  return true;
}

void validate(const Dataset& ds) {
  if (ds.obs_dim == 0) throw Error(Errc::DimensionMismatch, "obs_dim must be positive");
  std::set<std::string> seen;
  for (const auto& t : ds.trajectories) {
    if (!is_valid_id(t.id)) throw Error(Errc::CorruptBlob, "invalid trajectory id '" + t.id + "'");
    if (!seen.insert(t.id).second) throw Error(Errc::CorruptBlob, "duplicate trajectory id " + t.id);
    if (t.obs_dim != ds.obs_dim || t.action_dim != ds.action_dim)
      throw Error(Errc::DimensionMismatch, t.id);
    if (t.obs.size() % ds.obs_dim != 0 ||
        t.actions.size() != t.size() * ds.action_dim)
      throw Error(Errc::DimensionMismatch, t.id);
    if (!(t.fps > 0.0) || !std::isfinite(t.fps))
      throw Error(Errc::CorruptBlob, t.id + ": fps must be positive");
    if (t.empty()) throw Error(Errc::CorruptBlob, t.id + ": trajectory has no frames");
    if (!t.labels.empty() && t.labels.size() != t.size())
      throw Error(Errc::CorruptBlob, t.id + ": label count differs from frame count");
    check_finite(t);
  }
}

std::string encode_blob(const Trajectory& traj) {
  std::string out;
  out.reserve(kBlobHeaderBytes + 4 * (traj.obs.size() + traj.actions.size()));
  out.append(kBlobMagic, 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(traj.size()));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (float v : traj.obs_at(i)) put_f32(out, v);
    for (float v : traj.action_at(i)) put_f32(out, v);
  }
  return out;
}

void decode_blob(std::string_view bytes, Trajectory& traj) {
  if (bytes.size() < kBlobHeaderBytes)
    throw Error(Errc::TruncatedBlob, traj.id);
  if (std::memcmp(bytes.data(), kBlobMagic, 4) != 0)
    throw Error(Errc::CorruptBlob, traj.id + ": bad magic");
  if (get_u32(bytes.data() + 4) != kFormatVersion)
    throw Error(Errc::CorruptBlob, traj.id + ": unsupported format_version");
  const std::size_t n = get_u32(bytes.data() + 8);
  const std::size_t row = traj.obs_dim + traj.action_dim;
  const std::size_t payload = bytes.size() - kBlobHeaderBytes;
  if (payload != n * row * 4) {
    // A payload that splits evenly into n rows of some other width means the
    // writer used different dimensions; anything else is a short/torn file.
    if (n > 0 && payload % (n * 4) == 0) throw Error(Errc::DimensionMismatch, traj.id);
    throw Error(Errc::TruncatedBlob, traj.id);
  }
  traj.obs.resize(n * traj.obs_dim);
  traj.actions.resize(n * traj.action_dim);
  const char* p = bytes.data() + kBlobHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : traj.obs_at(i)) { v = get_f32(p); p += 4; }
    for (auto& v : traj.action_at(i)) { v = get_f32(p); p += 4; }
  }
}

Dataset load_dataset(const fs::path& root, int threads) {
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path))
    throw Error(Errc::MissingManifest, manifest_path.string());

  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptBlob, "manifest.json: " + std::string(e.what()));
  }

  Dataset ds;
  std::vector<std::size_t> declared_frames;
  try {
    if (manifest.at("format_version").get<std::uint32_t>() != kFormatVersion)
      throw Error(Errc::CorruptBlob, "manifest.json: unsupported format_version");
    ds.obs_dim = manifest.at("obs_dim").get<std::size_t>();
    ds.action_dim = manifest.at("action_dim").get<std::size_t>();
    if (manifest.contains("meta"))
      ds.meta = manifest.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& entry : manifest.at("trajectories")) {
      Trajectory t(entry.at("id").get<std::string>(), entry.at("fps").get<double>(),
                   ds.obs_dim, ds.action_dim);
      if (!is_valid_id(t.id)) throw Error(Errc::CorruptBlob, "invalid trajectory id '" + t.id + "'");
      if (entry.contains("labels"))
        t.labels = entry.at("labels").get<std::vector<std::string>>();
      declared_frames.push_back(entry.at("num_frames").get<std::size_t>());
      ds.trajectories.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptBlob, "manifest.json: " + std::string(e.what()));
  }

  parallel_for(ds.trajectories.size(), threads, [&](std::size_t i) {
    Trajectory& t = ds.trajectories[i];
    const fs::path blob = root / "trajectories" / (t.id + ".bin");
    if (!fs::exists(blob)) throw Error(Errc::TruncatedBlob, t.id + ": missing blob");
    decode_blob(read_file(blob), t);
    if (t.size() != declared_frames[i])
      throw Error(Errc::TruncatedBlob, t.id + ": frame count differs from manifest");
  });
  validate(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  validate(ds);
  std::error_code ec;
  fs::create_directories(root / "trajectories", ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + (root / "trajectories").string());

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["obs_dim"] = ds.obs_dim;
  manifest["action_dim"] = ds.action_dim;
  manifest["trajectories"] = json::array();
  for (const auto& t : ds.trajectories) {
    json entry = {{"id", t.id}, {"fps", t.fps}, {"num_frames", t.size()}};
    if (!t.labels.empty()) entry["labels"] = t.labels;
    manifest["trajectories"].push_back(std::move(entry));
    write_file(root / "trajectories" / (t.id + ".bin"), encode_blob(t));
  }
  if (!ds.meta.empty()) manifest["meta"] = ds.meta;
  write_file(root / "manifest.json", manifest.dump(2) + "\n");
}

std::size_t seconds_to_frames(double seconds, double fps) {
  const double frames = std::round(seconds * fps);
  return frames < 1.0 ? 1 : static_cast<std::size_t>(frames);
}

std::size_t window_count(std::size_t len, std::size_t span, std::size_t stride) {
  if (span == 0 || stride == 0 || len < span) return 0;
  return (len - span) / stride + 1;
}

std::vector<Window> sliding_windows(const Trajectory& traj, double span_seconds,
                                    std::size_t stride_frames) {
  if (stride_frames == 0) throw Error(Errc::InvalidConfig, "stride_frames must be >= 1");
  const std::size_t span = seconds_to_frames(span_seconds, traj.fps);
  const std::size_t n = window_count(traj.size(), span, stride_frames);
  std::vector<Window> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.push_back({traj.id, k * stride_frames, span, static_cast<double>(span) / traj.fps});
  return out;
}

}  // namespace trajcurate::store
