#include "trajcurate/mask.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "trajcurate/error.hpp"

namespace trajcurate::curation {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::None: return "";
    case Reason::Suboptimal: return "suboptimal";
    case Reason::Duplicate: return "duplicate";
    case Reason::Both: return "both";
  }
  return "";
}

Reason parse_reason(std::string_view s) {
  if (s.empty()) return Reason::None;
  if (s == "suboptimal") return Reason::Suboptimal;
  if (s == "duplicate") return Reason::Duplicate;
  if (s == "both") return Reason::Both;
  throw Error(Errc::CorruptBlob, "unknown mask reason '" + std::string(s) + "'");
}

std::size_t CurationMask::total_frames() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

std::size_t CurationMask::count(Reason r) const {
  std::size_t n = 0;
  for (const auto& t : trajectories)
    n += static_cast<std::size_t>(std::count(t.reason.begin(), t.reason.end(), r));
  return n;
}

std::size_t CurationMask::dropped() const {
  std::size_t n = 0;
  for (const auto& t : trajectories)
    n += static_cast<std::size_t>(std::count(t.keep.begin(), t.keep.end(), std::uint8_t{0}));
  return n;
}

namespace {
double ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}
}  // namespace

double CurationMask::deletion_ratio() const { return ratio(dropped(), total_frames()); }

double CurationMask::suboptimal_ratio() const {
  return ratio(count(Reason::Suboptimal) + count(Reason::Both), total_frames());
}

double CurationMask::duplicate_ratio() const {
  return ratio(count(Reason::Duplicate) + count(Reason::Both), total_frames());
}

const TrajectoryMask* CurationMask::find(const std::string& id) const {
  for (const auto& t : trajectories)
    if (t.traj_id == id) return &t;
  return nullptr;
}

void write_masks(const CurationMask& mask, const fs::path& out_dir) {
  const fs::path dir = out_dir / "masks";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string());
  for (const auto& t : mask.trajectories) {
    json j;
    j["format_version"] = 1;
    j["id"] = t.traj_id;
    std::vector<int> keep(t.keep.begin(), t.keep.end());
    j["keep"] = keep;
    std::vector<std::string> reasons;
    reasons.reserve(t.reason.size());
    for (auto r : t.reason) reasons.emplace_back(reason_name(r));
    j["reason"] = reasons;
    j["subopt_score"] = t.subopt_score;
    j["dup_similarity"] = t.dup_similarity;
    std::ofstream out(dir / (t.traj_id + ".json"), std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write mask for " + t.traj_id);
    out << j.dump() << "\n";
  }
}

CurationMask read_masks(const fs::path& dir) {
  const fs::path src = fs::is_directory(dir / "masks") ? dir / "masks" : dir;
  if (!fs::is_directory(src)) throw Error(Errc::IoFailure, "no mask directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(src))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());

  CurationMask mask;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
      TrajectoryMask t;
      t.traj_id = j.contains("id") ? j.at("id").get<std::string>() : f.stem().string();
      for (int k : j.at("keep").get<std::vector<int>>()) t.keep.push_back(k != 0 ? 1 : 0);
      for (const auto& r : j.at("reason").get<std::vector<std::string>>()) t.reason.push_back(parse_reason(r));
      t.subopt_score = j.at("subopt_score").get<std::vector<double>>();
      t.dup_similarity = j.at("dup_similarity").get<std::vector<double>>();
      const std::size_t n = t.keep.size();
      if (t.reason.size() != n || t.subopt_score.size() != n || t.dup_similarity.size() != n)
        throw Error(Errc::MaskShapeMismatch, f.string());
      mask.trajectories.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptBlob, f.string() + ": " + e.what());
    }
  }
  std::sort(mask.trajectories.begin(), mask.trajectories.end(),
            [](const auto& a, const auto& b) { return a.traj_id < b.traj_id; });
  return mask;
}

}  // namespace trajcurate::curation
