#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.hpp"
#include "trajcurate/error.hpp"
#include "trajcurate/trajstore.hpp"

namespace {

using namespace trajcurate;
using namespace trajcurate::store;
using testutil::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

template <class F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no trajcurate::Error thrown";
  return Errc::IoFailure;
}

TEST(Trajstore, RoundTripTwoTrajectories) {
  TempDir dir("store_rt");
  Dataset ds = testutil::random_dataset(2, 5, 9, 4, 2, 11);
  ds.trajectories[0].labels.assign(ds.trajectories[0].size(), "clean");
  ds.meta["source"] = "unit";
  save_dataset(ds, dir.path());
  const Dataset back = load_dataset(dir.path());
  EXPECT_EQ(back.trajectories.size(), 2u);
  EXPECT_EQ(back.obs_dim, 4u);
  EXPECT_EQ(back.action_dim, 2u);
  EXPECT_EQ(back, ds);
}

TEST(Trajstore, RoundTripIsBitwiseAndParallelLoadMatches) {
  TempDir dir("store_bits");
  Dataset ds = testutil::random_dataset(200, 20, 40, 8, 3, 5);
  ds.trajectories[3].obs[0] = std::numeric_limits<float>::denorm_min();
  ds.trajectories[3].obs[1] = -0.0f;
  save_dataset(ds, dir.path());
  const Dataset serial = load_dataset(dir.path(), 1);
  const Dataset parallel = load_dataset(dir.path(), 4);
  ASSERT_EQ(serial, ds);
  ASSERT_EQ(parallel, ds);
  EXPECT_TRUE(std::signbit(serial.trajectories[3].obs[1]));
}

TEST(Trajstore, EmptyDatasetWritesEmptyIndexAndNoBlobs) {
  TempDir dir("store_empty");
  Dataset ds;
  ds.obs_dim = 2;
  ds.action_dim = 1;
  save_dataset(ds, dir.path());
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_TRUE(manifest.at("trajectories").empty());
  EXPECT_EQ(manifest.at("format_version"), 1);
  EXPECT_TRUE(std::filesystem::is_empty(dir / "trajectories"));
  EXPECT_EQ(load_dataset(dir.path()), ds);
}

TEST(Trajstore, BlobSizeFollowsRecordLayout) {
  TempDir dir("store_size");
  Dataset ds;
  ds.obs_dim = 2;
  ds.action_dim = 1;
  Trajectory t("a", 10.0, 2, 1);
  for (int i = 0; i < 3; ++i) {
    const float o[2] = {static_cast<float>(i), 0.5f};
    const float a[1] = {-1.0f * i};
    t.push_frame(o, a);
  }
  ds.trajectories.push_back(t);
  save_dataset(ds, dir.path());
  const std::string bytes = slurp(dir / "trajectories" / "a.bin");
  // magic + version + count, then 3 records of (2 + 1) floats
  ASSERT_EQ(bytes.size(), 12u + 3u * 3u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "TRJC");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3u);
  // record 1, obs[0] = 1.0f = 0x3f800000 little endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[12 + 12 + 3]), 0x3fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12 + 12 + 2]), 0x80u);
}

TEST(Trajstore, TruncatedBlobDetected) {
  TempDir dir("store_trunc");
  const Dataset ds = testutil::random_dataset(2, 6, 6, 4, 2, 1);
  save_dataset(ds, dir.path());
  const auto blob = dir / "trajectories" / (ds.trajectories[1].id + ".bin");
  std::string bytes = slurp(blob);
  bytes.resize(bytes.size() - 10);  // cuts the last record mid-way
  spit(blob, bytes);
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::TruncatedBlob);
}

TEST(Trajstore, DimensionMismatchDetected) {
  TempDir dir("store_dim");
  const Dataset narrow = testutil::random_dataset(1, 5, 5, 16, 2, 3);
  save_dataset(narrow, dir.path());
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  manifest["obs_dim"] = 32;
  spit(dir / "manifest.json", manifest.dump());
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::DimensionMismatch);
}

TEST(Trajstore, MissingManifestAndMissingBlob) {
  TempDir dir("store_missing");
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::MissingManifest);
  const Dataset ds = testutil::random_dataset(2, 5, 5, 3, 1, 3);
  save_dataset(ds, dir.path());
  std::filesystem::remove(dir / "trajectories" / (ds.trajectories[0].id + ".bin"));
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::TruncatedBlob);
}

TEST(Trajstore, BadMagicAndFrameCount) {
  TempDir dir("store_magic");
  const Dataset ds = testutil::random_dataset(1, 5, 5, 3, 1, 3);
  save_dataset(ds, dir.path());
  const auto blob = dir / "trajectories" / (ds.trajectories[0].id + ".bin");
  std::string bytes = slurp(blob);
  std::string bad = bytes;
  bad[0] = 'X';
  spit(blob, bad);
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::CorruptBlob);
  spit(blob, bytes);
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  manifest["trajectories"][0]["num_frames"] = 4;
  spit(dir / "manifest.json", manifest.dump());
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::TruncatedBlob);
}

TEST(Trajstore, NonFiniteValuesRejected) {
  TempDir dir("store_nan");
  Dataset ds = testutil::random_dataset(1, 5, 5, 3, 1, 3);
  Trajectory& t = ds.trajectories[0];
  save_dataset(ds, dir.path());
  t.obs[4] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(error_of([&] { validate(ds); }), Errc::NonFiniteValue);
  spit(dir / "trajectories" / (t.id + ".bin"), encode_blob(t));
  EXPECT_EQ(error_of([&] { load_dataset(dir.path()); }), Errc::NonFiniteValue);
  t.obs[4] = 0.0f;
  t.actions[2] = std::numeric_limits<float>::infinity();
  EXPECT_EQ(error_of([&] { validate(ds); }), Errc::NonFiniteValue);
}

TEST(Trajstore, ValidateRejectsBrokenInvariants) {
  Dataset ds = testutil::random_dataset(2, 5, 5, 3, 1, 3);
  Dataset dup = ds;
  dup.trajectories[1].id = dup.trajectories[0].id;
  EXPECT_EQ(error_of([&] { validate(dup); }), Errc::CorruptBlob);
  Dataset fps = ds;
  fps.trajectories[0].fps = 0.0;
  EXPECT_EQ(error_of([&] { validate(fps); }), Errc::CorruptBlob);
  Dataset labels = ds;
  labels.trajectories[0].labels = {"clean"};
  EXPECT_EQ(error_of([&] { validate(labels); }), Errc::CorruptBlob);
  Dataset empty = ds;
  empty.trajectories[0].obs.clear();
  empty.trajectories[0].actions.clear();
  EXPECT_EQ(error_of([&] { validate(empty); }), Errc::CorruptBlob);
  Dataset dims = ds;
  dims.trajectories[0].obs_dim = 4;
  EXPECT_EQ(error_of([&] { validate(dims); }), Errc::DimensionMismatch);
  Dataset path = ds;
  path.trajectories[0].id = "../escape";
  EXPECT_EQ(error_of([&] { validate(path); }), Errc::CorruptBlob);
}

TEST(Trajstore, SecondsToFrames) {
  EXPECT_EQ(seconds_to_frames(2.0, 10.0), 20u);
  EXPECT_EQ(seconds_to_frames(2.0, 3.0), 6u);
  EXPECT_EQ(seconds_to_frames(0.01, 10.0), 1u);
  EXPECT_EQ(seconds_to_frames(2.0, 15.0), 30u);
}

Trajectory blank(std::size_t len, double fps = 10.0) {
  Trajectory t("w", fps, 1, 1);
  t.obs.assign(len, 0.0f);
  t.actions.assign(len, 0.0f);
  return t;
}

TEST(Trajstore, SlidingWindows) {
  auto w = sliding_windows(blank(25), 2.0, 1);
  ASSERT_EQ(w.size(), 6u);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w[i].start, i);
    EXPECT_EQ(w[i].span_frames, 20u);
    EXPECT_EQ(w[i].span_seconds, 20.0 / 10.0);
    EXPECT_EQ(w[i].traj_id, "w");
  }
  EXPECT_TRUE(sliding_windows(blank(19), 2.0, 1).empty());
  w = sliding_windows(blank(24), 2.0, 4);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].start, 0u);
  EXPECT_EQ(w[1].start, 4u);
  EXPECT_EQ(error_of([&] { sliding_windows(blank(24), 2.0, 0); }), Errc::InvalidConfig);
}

TEST(Trajstore, WindowCountMatchesClosedForm) {
  for (std::size_t len = 0; len < 60; ++len)
    for (std::size_t span = 1; span < 25; ++span)
      for (std::size_t stride = 1; stride < 6; ++stride) {
        const std::size_t expect = len < span ? 0 : (len - span) / stride + 1;
        ASSERT_EQ(window_count(len, span, stride), expect);
      }
  const auto w = sliding_windows(blank(37, 7.0), 2.0, 3);
  EXPECT_EQ(w.size(), window_count(37, 14, 3));
  for (const auto& win : w) {
    EXPECT_LE(win.start + win.span_frames, 37u);
    EXPECT_EQ(win.span_seconds, static_cast<double>(win.span_frames) / 7.0);
  }
}

}  // namespace
