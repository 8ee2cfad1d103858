#include "trajcurate/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajcurate/calibrate.hpp"
#include "trajcurate/config.hpp"
#include "trajcurate/error.hpp"
#include "trajcurate/evaluate.hpp"

namespace trajcurate::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config, data, out, model, masks, truth, embeddings;
  std::string epsilon_s, epsilon_d;
  std::vector<double> targets;
  std::uint64_t seed = 0;
  int threads = 1;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << text << "\n";
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json threshold_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json histogram(const std::vector<double>& values, std::size_t bins, std::optional<double> lo_fixed = {},
               std::optional<double> hi_fixed = {}) {
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) return {{"lo", 0.0}, {"hi", 0.0}, {"counts", std::vector<std::size_t>(bins, 0)}};
  const auto [mn, mx] = std::minmax_element(finite.begin(), finite.end());
  const double lo = lo_fixed.value_or(*mn), hi = hi_fixed.value_or(*mx);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : finite) {
    const double u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    const auto b = static_cast<std::size_t>(std::clamp(u * static_cast<double>(bins), 0.0,
                                                       static_cast<double>(bins - 1)));
    ++counts[b];
  }
  double sum = 0.0;
  for (double v : finite) sum += v;
  return {{"lo", lo}, {"hi", hi}, {"min", *mn}, {"max", *mx},
          {"mean", sum / static_cast<double>(finite.size())}, {"counts", counts}};
}

fs::path require_path(const std::string& value, const char* what) {
  if (value.empty()) throw Error(Errc::InvalidConfig, std::string("missing ") + what);
  return value;
}

store::Dataset load_data(const config::PipelineConfig& cfg) {
  return store::load_dataset(require_path(cfg.data, "--data"), cfg.threads);
}

nn::MlpClassifier load_model(const config::PipelineConfig& cfg, const store::Dataset& ds) {
  auto model = nn::load_checkpoint(require_path(cfg.model, "--model"));
  if (model.input_size() != ds.obs_dim)
    throw Error(Errc::DimensionMismatch, "model expects " + std::to_string(model.input_size()) +
                                             "-d observations, dataset has " + std::to_string(ds.obs_dim));
  if (model.num_classes() != cfg.bins.size())
    throw Error(Errc::DimensionMismatch, "model has " + std::to_string(model.num_classes()) +
                                             " classes for " + std::to_string(cfg.bins.size()) + " bins");
  return model;
}

std::optional<fs::path> embeddings_path(const config::PipelineConfig& cfg) {
  if (cfg.embeddings) return fs::path(*cfg.embeddings);
  return fs::path(cfg.data) / "chunk_embeddings.bin";
}

json subopt_params(const subopt::SuboptConfig& c) {
  return {{"window_seconds", c.window_seconds},
          {"stride_frames", c.stride_frames},
          {"gamma", c.gamma},
          {"mix_weight", c.mix_weight},
          {"epsilon_s", threshold_json(c.epsilon_s)},
          {"reverse_discount", c.reverse_discount},
          {"mode", c.mode == progress::ProgressMode::Argmax ? "argmax" : "expectation"}};
}

json dedup_params(const dedup::DedupConfig& c) {
  return {{"chunk_seconds", c.chunk_seconds},
          {"n_subsample", c.n_subsample},
          {"target_cluster_size", c.target_cluster_size},
          {"k", c.k},
          {"epsilon_d", threshold_json(c.epsilon_d)},
          {"max_iters", c.max_iters},
          {"drop_all_over_threshold", c.drop_all_over_threshold}};
}

json subopt_report(const subopt::SuboptResult& r, const subopt::SuboptConfig& c) {
  std::vector<double> scores;
  std::size_t scored = 0;
  for (const auto& s : r.series) {
    scored += s.scored;
    scores.insert(scores.end(), s.final_scores.begin(), s.final_scores.end());
  }
  return {{"format_version", 1},
          {"params", subopt_params(c)},
          {"trajectories", r.series.size()},
          {"scored_trajectories", scored},
          {"total_frames", r.total_frames},
          {"dropped_frames", r.dropped_frames},
          {"deletion_ratio", r.deletion_ratio()},
          {"final_score_histogram", histogram(scores, 64)}};
}

json dedup_report(const dedup::DedupResult& r, const dedup::DedupConfig& c) {
  std::vector<double> sims;
  for (double s : r.scores)
    if (s > dedup::kSingletonSimilarity) sims.push_back(s);
  std::vector<std::size_t> sizes;
  for (const auto& m : r.clusters.members()) sizes.push_back(m.size());
  const auto dropped_chunks = static_cast<std::size_t>(std::count(r.chunk_drop.begin(), r.chunk_drop.end(), 1));
  return {{"format_version", 1},
          {"params", dedup_params(c)},
          {"chunks", r.chunks.size()},
          {"feature_dim", r.feature_dim},
          {"action_weight", r.action_weight},
          {"k", r.clusters.k},
          {"kmeans_iterations", r.clusters.iterations},
          {"kmeans_converged", r.clusters.converged},
          {"inertia_history", r.clusters.inertia_history},
          {"cluster_sizes", sizes},
          {"singleton_chunks", r.scores.size() - sims.size()},
          {"dropped_chunks", dropped_chunks},
          {"dropped_frames", r.dropped_frames},
          {"chunked_frames", r.chunked_frames},
          {"total_frames", r.total_frames},
          {"deletion_ratio", r.deletion_ratio()},
          {"chunked_deletion_ratio", r.chunked_deletion_ratio()},
          {"similarity_histogram", histogram(sims, 64, -1.0, 1.0)}};
}

void write_series(const subopt::SuboptResult& r, const fs::path& path) {
  json series = json::array();
  for (const auto& s : r.series)
    series.push_back({{"traj_id", s.traj_id},
                      {"scored", s.scored},
                      {"span_frames", s.span_frames},
                      {"window_starts", s.window_starts},
                      {"window_scores", s.window_scores},
                      {"sample_scores", s.sample_scores},
                      {"discounted", s.discounted},
                      {"final_scores", s.final_scores}});
  write_text(path, json{{"format_version", 1}, {"series", series}}.dump());
}

// ---- subcommands ----

int cmd_gen(const config::PipelineConfig& cfg, std::ostream& out) {
  const fs::path root = require_path(cfg.out, "--out");
  const auto synth = synth::generate(cfg.synth, cfg.threads);
  synth::save_synthetic(synth, root);
  const auto& gt = synth.truth;
  json by_type = json::object();
  for (auto t : synth::kAnomalyTypes) by_type[std::string(synth::anomaly_name(t))] = gt.count(t);
  const auto& sc = gt.self_check;
  json report = {{"format_version", 1},
                 {"trajectories", synth.dataset.trajectories.size()},
                 {"total_frames", synth.dataset.total_frames()},
                 {"anomaly_frames", by_type},
                 {"duplicate_groups", gt.groups.size()},
                 {"chunk_frames", gt.chunk_frames},
                 {"self_check",
                  {{"min_duplicate_similarity", sc.min_duplicate_similarity},
                   {"max_cross_phase_similarity", sc.max_cross_phase_similarity},
                   {"cross_phase_pairs", sc.cross_phase_pairs}}}};
  write_text(root / "generation_report.json", report.dump(2));
  out << "generated " << synth.dataset.trajectories.size() << " trajectories, "
      << synth.dataset.total_frames() << " frames, " << gt.groups.size() << " duplicate groups\n";
  out << "self-check: duplicate similarity >= " << fixed(sc.min_duplicate_similarity, 4)
      << ", cross-phase similarity <= " << fixed(sc.max_cross_phase_similarity, 4) << "\n";
  return kExitOk;
}

int cmd_train(const config::PipelineConfig& cfg, std::ostream& out) {
  const fs::path model_path = require_path(cfg.out, "--out");
  const auto ds = load_data(cfg);
  const auto trained = progress::train_progress_model(ds, cfg.bins, cfg.train);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  nn::save_checkpoint(trained.model, model_path);
  const auto& r = trained.report;
  json report = {{"format_version", 1},
                 {"layer_sizes", trained.model.layer_sizes},
                 {"bin_edges", cfg.bins.edges},
                 {"pairs_train", r.pairs_train},
                 {"pairs_val", r.pairs_val},
                 {"accuracy", r.accuracy},
                 {"confusion", r.confusion},
                 {"initial_loss", trained.initial_loss},
                 {"final_loss", trained.final_loss}};
  fs::path report_path = model_path;
  report_path.replace_extension(".validation.json");
  write_text(report_path, report.dump(2));
  out << "trained on " << r.pairs_train << " pairs; held-out bin accuracy " << fixed(r.accuracy, 4)
      << " over " << r.pairs_val << " pairs\n";
  return kExitOk;
}

int cmd_score(const config::PipelineConfig& cfg, std::ostream& out) {
  const fs::path root = require_path(cfg.out, "--out");
  const auto ds = load_data(cfg);
  const auto model = load_model(cfg, ds);
  const auto r = subopt::score_dataset(ds, model, cfg.bins, cfg.subopt, cfg.threads);
  curation::write_masks(calibrate::build_mask(ds, &r, nullptr), root);
  write_series(r, root / "score_series.json");
  write_text(root / "subopt_report.json", subopt_report(r, cfg.subopt).dump(2));
  out << "suboptimal frames: " << r.dropped_frames << " / " << r.total_frames << " ("
      << fixed(100.0 * r.deletion_ratio()) << "%)\n";
  return kExitOk;
}

int cmd_dedup(const config::PipelineConfig& cfg, std::ostream& out) {
  const fs::path root = require_path(cfg.out, "--out");
  const auto ds = load_data(cfg);
  const auto r = dedup::dedup_dataset(ds, cfg.dedup, cfg.threads, embeddings_path(cfg));
  curation::write_masks(calibrate::build_mask(ds, nullptr, &r), root);
  write_text(root / "dedup_report.json", dedup_report(r, cfg.dedup).dump(2));
  out << "duplicate frames: " << r.dropped_frames << " / " << r.total_frames << " ("
      << fixed(100.0 * r.deletion_ratio()) << "%)\n";
  return kExitOk;
}

int cmd_calibrate(const config::PipelineConfig& cfg, std::ostream& out) {
  const fs::path root = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
  const auto ds = load_data(cfg);
  const auto model = load_model(cfg, ds);
  const auto so = subopt::score_dataset(ds, model, cfg.bins, cfg.subopt, cfg.threads);
  const auto dd = dedup::dedup_dataset(ds, cfg.dedup, cfg.threads, embeddings_path(cfg));

  // Frames of unscored trajectories can never be dropped.
  std::vector<double> scores;
  for (const auto& s : so.series)
    for (double v : s.final_scores) scores.push_back(s.scored ? v : -std::numeric_limits<double>::infinity());
  if (scores.empty()) throw Error(Errc::EmptyScores, "dataset has no frames");

  std::optional<dedup::DuplicateIndex> index;
  if (!dd.chunks.empty()) index.emplace(dd.chunks, dd.feature_view(), dd.clusters, cfg.threads);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : scores)
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const auto s_grid = calibrate::linspace(lo, hi, 33);
  const auto d_grid = calibrate::linspace(0.90, 1.0, 21);
  const auto s_curve = calibrate::ratio_curve(scores, s_grid);
  calibrate::RatioCurve d_curve{calibrate::Method::Dedup, {}};
  if (index)
    d_curve = calibrate::dedup_ratio_curve(*index, dd.chunks, dd.total_frames, d_grid,
                                           cfg.dedup.drop_all_over_threshold);

  json targets = json::array();
  out << "target   epsilon_s    achieved   epsilon_d    achieved\n";
  for (double t : cfg.targets) {
    const auto s = calibrate::threshold_for_ratio(scores, t);
    calibrate::ThresholdChoice d{t, 1.0, 0.0};
    if (index)
      d = calibrate::dedup_threshold_for_ratio(*index, dd.chunks, dd.total_frames, t,
                                               cfg.dedup.drop_all_over_threshold);
    targets.push_back({{"target", t},
                       {"suboptimal", {{"epsilon_s", threshold_json(s.threshold)}, {"achieved", s.achieved}}},
                       {"dedup", {{"epsilon_d", threshold_json(d.threshold)}, {"achieved", d.achieved}}}});
    char line[128];
    std::snprintf(line, sizeof line, "%6.3f  %10.5f  %10.4f  %10.6f  %10.4f\n", t, s.threshold, s.achieved,
                  d.threshold, d.achieved);
    out << line;
  }
  auto curve_json = [](const calibrate::RatioCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points) pts.push_back({{"threshold", p.threshold}, {"ratio", p.ratio}});
    return json{{"points", pts}, {"monotone", c.monotone()}};
  };
  json report = {{"format_version", 1},
                 {"subopt_params", subopt_params(cfg.subopt)},
                 {"dedup_params", dedup_params(cfg.dedup)},
                 {"total_frames", scores.size()},
                 {"targets", targets},
                 {"suboptimal_curve", curve_json(s_curve)},
                 {"dedup_curve", curve_json(d_curve)}};
  write_text(root / "calibration_report.json", report.dump(2));
  return kExitOk;
}

json kept_ranges(const curation::TrajectoryMask& m) {
  json ranges = json::array();
  std::size_t i = 0;
  while (i < m.size()) {
    if (!m.keep[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < m.size() && m.keep[j]) ++j;
    ranges.push_back({i, j});
    i = j;
  }
  return ranges;
}

int cmd_curate(const config::PipelineConfig& cfg, std::ostream& out) {
  const fs::path root = require_path(cfg.out, "--out");
  const auto ds = load_data(cfg);
  const auto model = load_model(cfg, ds);
  const auto so = subopt::score_dataset(ds, model, cfg.bins, cfg.subopt, cfg.threads);
  const auto dd = dedup::dedup_dataset(ds, cfg.dedup, cfg.threads, embeddings_path(cfg));
  const auto mask = calibrate::build_mask(ds, &so, &dd);
  curation::write_masks(mask, root);

  json trajs = json::array();
  std::size_t kept = 0;
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
    const auto& m = mask.trajectories[t];
    const auto n_kept = static_cast<std::size_t>(std::count(m.keep.begin(), m.keep.end(), 1));
    kept += n_kept;
    trajs.push_back({{"id", m.traj_id},
                     {"fps", ds.trajectories[t].fps},
                     {"num_frames", m.size()},
                     {"kept_frames", n_kept},
                     {"kept_ranges", kept_ranges(m)}});
  }
  const std::size_t total = mask.total_frames();
  json manifest = {{"format_version", 1},
                   {"obs_dim", ds.obs_dim},
                   {"action_dim", ds.action_dim},
                   {"total_frames", total},
                   {"kept_frames", kept},
                   {"trajectories", trajs}};
  write_text(root / "curated_manifest.json", manifest.dump(2));

  const std::size_t both = mask.count(curation::Reason::Both);
  const std::size_t s_frames = mask.count(curation::Reason::Suboptimal) + both;
  const std::size_t d_frames = mask.count(curation::Reason::Duplicate) + both;
  json summary = {{"format_version", 1},
                  {"epsilon_s", threshold_json(cfg.subopt.epsilon_s)},
                  {"epsilon_d", threshold_json(cfg.dedup.epsilon_d)},
                  {"total_frames", total},
                  {"suboptimal_frames", s_frames},
                  {"duplicate_frames", d_frames},
                  {"overlap_frames", both},
                  {"dropped_frames", mask.dropped()},
                  {"suboptimal_ratio", mask.suboptimal_ratio()},
                  {"duplicate_ratio", mask.duplicate_ratio()},
                  {"overlap_ratio", total == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(total)},
                  {"deletion_ratio", mask.deletion_ratio()}};
  write_text(root / "summary_report.json", summary.dump(2));

  char line[160];
  std::snprintf(line, sizeof line, "%-14s %16s %19s %10s\n", "", "Suboptimal-Only", "Deduplication-Only",
                "Total");
  out << line;
  std::snprintf(line, sizeof line, "%-14s %16s %19s %10s\n", "Deletion (%)",
                fixed(100.0 * mask.suboptimal_ratio()).c_str(), fixed(100.0 * mask.duplicate_ratio()).c_str(),
                fixed(100.0 * mask.deletion_ratio()).c_str());
  out << line;
  std::snprintf(line, sizeof line, "%-14s %16zu %19zu %10zu\n", "Frames", s_frames, d_frames, mask.dropped());
  out << line;
  return kExitOk;
}

int cmd_report(const Flags& f, std::ostream& out) {
  const fs::path masks = require_path(f.masks, "--masks");
  const fs::path truth = require_path(f.truth, "--truth");
  const auto mask = curation::read_masks(masks);
  const auto gt = synth::load_ground_truth(truth);
  const auto m = synth::evaluate_masks(mask, gt);
  const fs::path dest = f.out.empty() ? masks / "metrics.json" : fs::path(f.out);
  write_text(dest, synth::metrics_json(m));

  out << "suboptimal  precision " << fixed(m.subopt_precision, 3) << (m.subopt_precision_defined ? "" : " (empty)")
      << "  recall " << fixed(m.subopt_recall, 3) << "  fpr " << fixed(m.false_positive_rate, 3) << "  auroc "
      << fixed(m.auroc, 3) << "\n";
  for (const auto& [type, r] : m.recall_at_gt_fraction)
    out << "  " << synth::anomaly_name(type) << " recall at anomaly fraction " << fixed(r, 3) << "\n";
  out << "duplicates  precision " << fixed(m.dup_precision, 3) << (m.dup_precision_defined ? "" : " (empty)")
      << "  recall " << fixed(m.dup_recall, 3) << "  planted " << m.planted_duplicates << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trajectory dataset curation: suboptimal-transition removal and deduplication"};
  app.name("trajcurate");
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--threads", f.threads, "Worker threads (1 = bitwise deterministic)");
    sub->add_option("--seed", f.seed, "Run seed");
  };
  auto* gen = app.add_subcommand("gen", "Generate a synthetic benchmark dataset");
  common(gen);
  gen->add_option("--out", f.out, "Output dataset directory");

  auto* train = app.add_subcommand("train-progress", "Train the temporal-progress classifier");
  common(train);
  train->add_option("--data", f.data, "Dataset directory");
  train->add_option("--out", f.out, "Checkpoint path");

  auto* score = app.add_subcommand("score-subopt", "Score and mask suboptimal transitions");
  common(score);
  score->add_option("--data", f.data, "Dataset directory");
  score->add_option("--model", f.model, "Progress checkpoint");
  score->add_option("--out", f.out, "Output directory");
  score->add_option("--epsilon-s", f.epsilon_s, "Suboptimality threshold (number or inf)");

  auto* dd = app.add_subcommand("dedup", "Mask redundant chunks");
  common(dd);
  dd->add_option("--data", f.data, "Dataset directory");
  dd->add_option("--out", f.out, "Output directory");
  dd->add_option("--epsilon-d", f.epsilon_d, "Similarity threshold (number or inf)");
  dd->add_option("--embeddings", f.embeddings, "Precomputed chunk embeddings file");

  auto* cal = app.add_subcommand("calibrate", "Find thresholds for target deletion ratios");
  common(cal);
  cal->add_option("--data", f.data, "Dataset directory");
  cal->add_option("--model", f.model, "Progress checkpoint");
  cal->add_option("--out", f.out, "Report directory (default: current directory)");
  auto* targets_opt = cal->add_option("--targets", f.targets, "Comma-separated deletion ratios")->delimiter(',');
  cal->add_option("--embeddings", f.embeddings, "Precomputed chunk embeddings file");

  auto* cur = app.add_subcommand("curate", "Apply both filters and write the curated manifest");
  common(cur);
  cur->add_option("--data", f.data, "Dataset directory");
  cur->add_option("--model", f.model, "Progress checkpoint");
  cur->add_option("--out", f.out, "Output directory");
  cur->add_option("--epsilon-s", f.epsilon_s, "Suboptimality threshold (number or inf)");
  cur->add_option("--epsilon-d", f.epsilon_d, "Similarity threshold (number or inf)");
  cur->add_option("--embeddings", f.embeddings, "Precomputed chunk embeddings file");

  auto* rep = app.add_subcommand("report", "Evaluate masks against synthetic ground truth");
  rep->add_option("--masks", f.masks, "Directory holding masks/")->required();
  rep->add_option("--truth", f.truth, "Synthetic dataset directory")->required();
  rep->add_option("--out", f.out, "Metrics file (default: <masks>/metrics.json)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub == rep) return cmd_report(f, out);

    config::PipelineConfig cfg = f.config.empty() ? config::PipelineConfig{} : config::load_config(f.config);
    auto set = [&](const char* name) {
      const auto* opt = sub->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (set("--data")) cfg.data = f.data;
    if (set("--out")) cfg.out = f.out;
    if (set("--model")) cfg.model = f.model;
    if (set("--threads")) cfg.threads = f.threads;
    if (set("--seed")) cfg.seed = f.seed;
    if (set("--epsilon-s")) cfg.subopt.epsilon_s = config::parse_threshold(f.epsilon_s);
    if (set("--epsilon-d")) cfg.dedup.epsilon_d = config::parse_threshold(f.epsilon_d);
    if (set("--embeddings")) cfg.embeddings = f.embeddings;
    if (sub == cal && targets_opt->count() > 0) cfg.targets = f.targets;
    cfg.apply_seed();
    cfg.validate();

    if (sub == gen) return cmd_gen(cfg, out);
    if (sub == train) return cmd_train(cfg, out);
    if (sub == score) return cmd_score(cfg, out);
    if (sub == dd) return cmd_dedup(cfg, out);
    if (sub == cal) return cmd_calibrate(cfg, out);
    if (sub == cur) return cmd_curate(cfg, out);
    return kExitUsage;
  } catch (const Error& e) {
    err << "trajcurate: " << e.what() << "\n";
    return e.code() == Errc::InvalidConfig ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "trajcurate: " << e.what() << "\n";
    return kExitData;
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace trajcurate::cli
