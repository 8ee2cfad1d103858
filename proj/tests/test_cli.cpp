#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.hpp"
#include "trajcurate/cli.hpp"
#include "trajcurate/config.hpp"
#include "trajcurate/error.hpp"

namespace {

using namespace trajcurate;
namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

const char* kSmallConfig = R"({
  "synth": {"num_traj": 12, "frames_per_traj": 120, "anomaly_rates": {"pause": 0, "slow": 0,
            "back_and_forth": 0, "failure_retry": 0}, "duplicate_rate": 0},
  "train": {"hidden": [16], "epochs": 3, "pairs_per_traj": 32}
})";

TEST(Config, DefaultsAndRoundTrip) {
  const auto c = config::parse_config("{}");
  EXPECT_EQ(c.threads, 1);
  EXPECT_EQ(c.targets, (std::vector<double>{0.10, 0.20, 0.30}));
  EXPECT_EQ(c.subopt.gamma, 0.9);
  EXPECT_EQ(c.bins.edges, (std::vector<double>{0.0, 0.5, 1.0, 2.0, 5.0}));
  const auto text = config::to_json(c);
  EXPECT_EQ(config::to_json(config::parse_config(text)), text);

  auto edited = config::parse_config(R"({"seed": 7, "subopt": {"epsilon_s": "-inf"}, "dedup": {"epsilon_d": 0.5}})");
  EXPECT_EQ(edited.seed, 7u);
  EXPECT_EQ(edited.synth.seed, 7u);
  EXPECT_EQ(edited.subopt.epsilon_s, -std::numeric_limits<double>::infinity());
  const auto again = config::parse_config(config::to_json(edited));
  EXPECT_EQ(again.subopt.epsilon_s, edited.subopt.epsilon_s);
  EXPECT_EQ(again.dedup.epsilon_d, 0.5);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {R"({"sed": 1})", R"({"subopt": {"gama": 0.9}})", R"({"threads": 0})",
                           R"({"targets": [1.5]})", R"({"synth": {"anomaly_rates": {"wobble": 0.1}}})",
                           "not json"}) {
    try {
      config::parse_config(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidConfig) << text;
    }
  }
}

TEST(Config, ParseThreshold) {
  EXPECT_EQ(config::parse_threshold("inf"), std::numeric_limits<double>::infinity());
  EXPECT_EQ(config::parse_threshold("+inf"), std::numeric_limits<double>::infinity());
  EXPECT_EQ(config::parse_threshold("-inf"), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(config::parse_threshold("0.25"), 0.25);
  EXPECT_EQ(config::parse_threshold("-1e-3"), -1e-3);
  EXPECT_THROW(config::parse_threshold("0.25x"), Error);
  EXPECT_THROW(config::parse_threshold("nan"), Error);
  EXPECT_THROW(config::parse_threshold(""), Error);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen"}).code, cli::kExitUsage);  // no --out
  EXPECT_EQ(run({"curate", "--epsilon-s", "abc", "--data", "x", "--out", "y"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, UnknownConfigKeyWritesNothing) {
  testutil::TempDir dir("cli_badcfg");
  write_file(dir / "cfg.json", R"({"synth": {"num_trajs": 3}})");
  const auto r = run({"gen", "--config", (dir / "cfg.json").string(), "--out", (dir / "data").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("num_trajs"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "data"));
}

TEST(Cli, MissingDataExitsTwo) {
  testutil::TempDir dir("cli_nodata");
  const auto r = run({"dedup", "--data", (dir / "absent").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, InfiniteThresholdsKeepEverything) {
  testutil::TempDir dir("cli_pipeline");
  const auto cfg = (dir / "cfg.json").string();
  write_file(cfg, kSmallConfig);
  const auto data = (dir / "data").string(), model = (dir / "model.bin").string();
  ASSERT_EQ(run({"gen", "--config", cfg, "--out", data}).code, cli::kExitOk);
  ASSERT_EQ(run({"train-progress", "--config", cfg, "--data", data, "--out", model}).code, cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "model.validation.json"));

  const auto cur = (dir / "cur").string();
  const auto r = run({"curate", "--config", cfg, "--data", data, "--model", model, "--out", cur,
                      "--epsilon-s", "inf", "--epsilon-d", "1.01"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("Deletion (%)"), std::string::npos);

  const auto manifest = read_json(dir / "cur" / "curated_manifest.json");
  EXPECT_EQ(manifest["kept_frames"], manifest["total_frames"]);
  EXPECT_EQ(manifest["total_frames"].get<std::size_t>(), 12u * 120u);
  for (const auto& t : manifest["trajectories"]) {
    ASSERT_EQ(t["kept_ranges"].size(), 1u);
    EXPECT_EQ(t["kept_ranges"][0][0], 0);
    EXPECT_EQ(t["kept_ranges"][0][1], t["num_frames"]);
  }
  const auto summary = read_json(dir / "cur" / "summary_report.json");
  EXPECT_EQ(summary["deletion_ratio"].get<double>(), 0.0);
  EXPECT_EQ(summary["epsilon_s"], "inf");

  const auto rep = run({"report", "--masks", cur, "--truth", data});
  ASSERT_EQ(rep.code, cli::kExitOk) << rep.err;
  const auto metrics = read_json(dir / "cur" / "metrics.json");
  EXPECT_EQ(metrics["format_version"], 1);
}

TEST(Cli, ModelDimensionMismatchExitsTwo) {
  testutil::TempDir dir("cli_dim");
  const auto cfg = (dir / "cfg.json").string();
  write_file(cfg, kSmallConfig);
  const auto data = (dir / "data").string(), model = (dir / "model.bin").string();
  ASSERT_EQ(run({"gen", "--config", cfg, "--out", data}).code, cli::kExitOk);
  ASSERT_EQ(run({"train-progress", "--config", cfg, "--data", data, "--out", model}).code, cli::kExitOk);

  auto other = json::parse(kSmallConfig);
  other["synth"]["obs_dim"] = 40;
  const auto cfg2 = (dir / "cfg2.json").string();
  write_file(cfg2, other.dump());
  const auto data2 = (dir / "data2").string();
  ASSERT_EQ(run({"gen", "--config", cfg2, "--out", data2}).code, cli::kExitOk);
  const auto r = run({"score-subopt", "--data", data2, "--model", model, "--out", (dir / "s").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("DimensionMismatch"), std::string::npos) << r.err;
}

}  // namespace
