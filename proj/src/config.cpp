#include "trajcurate/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trajcurate/error.hpp"

namespace trajcurate::config {

using nlohmann::json;

double parse_threshold(std::string_view text) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (text == "inf" || text == "+inf") return inf;
  if (text == "-inf") return -inf;
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidConfig, "not a threshold: '" + s + "'");
  }
  if (used != s.size() || std::isnan(v)) throw Error(Errc::InvalidConfig, "not a threshold: '" + s + "'");
  return v;
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw Error(Errc::InvalidConfig, "unknown key '" + where + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_threshold(const json& j, const char* key, double& dst) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  dst = v.is_string() ? parse_threshold(v.get<std::string>()) : v.get<double>();
}

json threshold_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void parse_progress(const json& j, PipelineConfig& c) {
  check_keys(j, "progress.", {"bin_edges", "bin_representatives", "mode"});
  read(j, "bin_edges", c.bins.edges);
  read(j, "bin_representatives", c.bins.representatives);
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "expectation")
      c.subopt.mode = progress::ProgressMode::Expectation;
    else if (m == "argmax")
      c.subopt.mode = progress::ProgressMode::Argmax;
    else
      throw Error(Errc::InvalidConfig, "progress.mode must be expectation or argmax");
  }
}

void parse_subopt(const json& j, PipelineConfig& c) {
  check_keys(j, "subopt.", {"window_seconds", "stride_frames", "gamma", "mix_weight", "epsilon_s",
                            "reverse_discount"});
  read(j, "window_seconds", c.subopt.window_seconds);
  read(j, "stride_frames", c.subopt.stride_frames);
  read(j, "gamma", c.subopt.gamma);
  read(j, "mix_weight", c.subopt.mix_weight);
  read_threshold(j, "epsilon_s", c.subopt.epsilon_s);
  read(j, "reverse_discount", c.subopt.reverse_discount);
}

void parse_dedup(const json& j, PipelineConfig& c) {
  check_keys(j, "dedup.", {"chunk_seconds", "n_subsample", "target_cluster_size", "k", "action_weight",
                           "epsilon_d", "max_iters", "drop_all_over_threshold", "embeddings"});
  auto& d = c.dedup;
  read(j, "chunk_seconds", d.chunk_seconds);
  read(j, "n_subsample", d.n_subsample);
  read(j, "target_cluster_size", d.target_cluster_size);
  read(j, "k", d.k);
  if (j.contains("action_weight")) {
    if (j.at("action_weight").is_null())
      d.action_weight.reset();
    else
      d.action_weight = j.at("action_weight").get<double>();
  }
  read_threshold(j, "epsilon_d", d.epsilon_d);
  read(j, "max_iters", d.max_iters);
  read(j, "drop_all_over_threshold", d.drop_all_over_threshold);
  if (j.contains("embeddings")) c.embeddings = j.at("embeddings").get<std::string>();
}

void parse_train(const json& j, PipelineConfig& c) {
  check_keys(j, "train.", {"hidden", "learning_rate", "epochs", "batch_size", "l2", "pairs_per_traj",
                           "dt_cap", "val_fraction"});
  auto& t = c.train;
  read(j, "hidden", t.hidden);
  read(j, "learning_rate", t.train.learning_rate);
  read(j, "epochs", t.train.epochs);
  read(j, "batch_size", t.train.batch_size);
  read(j, "l2", t.train.l2);
  read(j, "pairs_per_traj", t.sampling.pairs_per_traj);
  read(j, "dt_cap", t.sampling.dt_cap);
  read(j, "val_fraction", t.val_fraction);
}

void parse_synth(const json& j, PipelineConfig& c) {
  check_keys(j, "synth.", {"num_traj", "frames_per_traj", "fps", "obs_dim", "action_dim",
                           "anomaly_rates", "duplicate_rate", "noise_sigma", "chunk_seconds",
                           "harmonics", "context_dim", "phase_scale", "harmonic_scale",
                           "context_scale", "position_span"});
  auto& s = c.synth;
  read(j, "num_traj", s.num_traj);
  read(j, "frames_per_traj", s.frames_per_traj);
  read(j, "fps", s.fps);
  read(j, "obs_dim", s.obs_dim);
  read(j, "action_dim", s.action_dim);
  if (j.contains("anomaly_rates")) {
    const auto& r = j.at("anomaly_rates");
    check_keys(r, "synth.anomaly_rates.", {"pause", "slow", "back_and_forth", "failure_retry"});
    for (const auto& [key, value] : r.items()) s.anomaly_rates[synth::parse_anomaly(key)] = value.get<double>();
  }
  read(j, "duplicate_rate", s.duplicate_rate);
  read(j, "noise_sigma", s.noise_sigma);
  read(j, "chunk_seconds", s.chunk_seconds);
  read(j, "harmonics", s.harmonics);
  read(j, "context_dim", s.context_dim);
  read(j, "phase_scale", s.phase_scale);
  read(j, "harmonic_scale", s.harmonic_scale);
  read(j, "context_scale", s.context_scale);
  read(j, "position_span", s.position_span);
}

}  // namespace

void PipelineConfig::apply_seed() {
  train.train.seed = seed;
  train.sampling.seed = seed;
  dedup.seed = seed;
  synth.seed = seed;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidConfig, m); };
  if (threads < 1) fail("threads must be >= 1");
  for (double t : targets)
    if (!(t >= 0.0 && t <= 1.0)) fail("calibration targets must lie in [0, 1]");
  bins.validate();
  subopt.validate();
  dedup.validate();
  if (train.hidden.empty()) fail("train.hidden needs at least one layer");
  for (auto h : train.hidden)
    if (h == 0) fail("train.hidden sizes must be positive");
  if (!(train.train.learning_rate > 0.0)) fail("train.learning_rate must be positive");
  if (train.train.epochs == 0 || train.train.batch_size == 0) fail("train.epochs and batch_size must be positive");
  if (!(train.train.l2 >= 0.0)) fail("train.l2 must be non-negative");
  if (train.sampling.pairs_per_traj == 0) fail("train.pairs_per_traj must be positive");
  if (!(train.sampling.dt_cap > bins.edges.back())) fail("train.dt_cap must exceed the last bin edge");
  if (!(train.val_fraction > 0.0 && train.val_fraction < 1.0)) fail("train.val_fraction must lie in (0, 1)");
  synth.validate();
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "", {"data", "out", "model", "seed", "threads", "targets", "progress", "subopt",
                       "dedup", "train", "synth"});
    read(j, "data", c.data);
    read(j, "out", c.out);
    read(j, "model", c.model);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    read(j, "targets", c.targets);
    if (j.contains("progress")) parse_progress(j.at("progress"), c);
    if (j.contains("subopt")) parse_subopt(j.at("subopt"), c);
    if (j.contains("dedup")) parse_dedup(j.at("dedup"), c);
    if (j.contains("train")) parse_train(j.at("train"), c);
    if (j.contains("synth")) parse_synth(j.at("synth"), c);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  c.apply_seed();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidConfig, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const PipelineConfig& c) {
  json rates = json::object();
  for (const auto& [type, r] : c.synth.anomaly_rates) rates[std::string(synth::anomaly_name(type))] = r;
  json j = {
      {"data", c.data},
      {"out", c.out},
      {"model", c.model},
      {"seed", c.seed},
      {"threads", c.threads},
      {"targets", c.targets},
      {"progress",
       {{"bin_edges", c.bins.edges},
        {"bin_representatives", c.bins.representatives},
        {"mode", c.subopt.mode == progress::ProgressMode::Argmax ? "argmax" : "expectation"}}},
      {"subopt",
       {{"window_seconds", c.subopt.window_seconds},
        {"stride_frames", c.subopt.stride_frames},
        {"gamma", c.subopt.gamma},
        {"mix_weight", c.subopt.mix_weight},
        {"epsilon_s", threshold_json(c.subopt.epsilon_s)},
        {"reverse_discount", c.subopt.reverse_discount}}},
      {"dedup",
       {{"chunk_seconds", c.dedup.chunk_seconds},
        {"n_subsample", c.dedup.n_subsample},
        {"target_cluster_size", c.dedup.target_cluster_size},
        {"k", c.dedup.k},
        {"action_weight", c.dedup.action_weight ? json(*c.dedup.action_weight) : json(nullptr)},
        {"epsilon_d", threshold_json(c.dedup.epsilon_d)},
        {"max_iters", c.dedup.max_iters},
        {"drop_all_over_threshold", c.dedup.drop_all_over_threshold}}},
      {"train",
       {{"hidden", c.train.hidden},
        {"learning_rate", c.train.train.learning_rate},
        {"epochs", c.train.train.epochs},
        {"batch_size", c.train.train.batch_size},
        {"l2", c.train.train.l2},
        {"pairs_per_traj", c.train.sampling.pairs_per_traj},
        {"dt_cap", c.train.sampling.dt_cap},
        {"val_fraction", c.train.val_fraction}}},
      {"synth",
       {{"num_traj", c.synth.num_traj},
        {"frames_per_traj", c.synth.frames_per_traj},
        {"fps", c.synth.fps},
        {"obs_dim", c.synth.obs_dim},
        {"action_dim", c.synth.action_dim},
        {"anomaly_rates", rates},
        {"duplicate_rate", c.synth.duplicate_rate},
        {"noise_sigma", c.synth.noise_sigma},
        {"chunk_seconds", c.synth.chunk_seconds},
        {"harmonics", c.synth.harmonics},
        {"context_dim", c.synth.context_dim},
        {"phase_scale", c.synth.phase_scale},
        {"harmonic_scale", c.synth.harmonic_scale},
        {"context_scale", c.synth.context_scale},
        {"position_span", c.synth.position_span}}},
  };
  if (c.embeddings) j["dedup"]["embeddings"] = *c.embeddings;
  return j.dump(2);
}

}  // namespace trajcurate::config
