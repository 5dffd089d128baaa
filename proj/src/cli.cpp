// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "chgcorr/error.hpp"
#include "chgcorr/evaluation.hpp"
#include "chgcorr/scene_io.hpp"

namespace chgcorr::cli {

namespace fs = std::filesystem;

namespace {

// Runs fn(0..n-1) on up to `jobs` threads. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, n); ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : workers) t.join();
}

SceneFailure failure_from(const fs::path& path, const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return {path.string(), err->code(), err->what()};
  return {path.string(), ErrorCode::InvalidArgument, e.what()};
}

json error_record(const SceneFailure& f) {
  return {{"scene_path", f.path}, {"error", {{"code", to_string(f.code)}, {"message", f.message}}}};
}

// Output goes to the named file when given, otherwise to `out`.
class Sink {
 public:
  Sink(const std::optional<fs::path>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path) {
      file_.open(*path, std::ios::trunc);
      if (!file_) throw Error(ErrorCode::IoError, "cannot open " + path->string() + " for writing");
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::string transform_spec_name(TransformSpec::Kind kind) {
  switch (kind) {
    case TransformSpec::Kind::Identity: return "identity";
    case TransformSpec::Kind::Translation: return "translation";
    case TransformSpec::Kind::Affine: return "affine";
    case TransformSpec::Kind::RandomAffine: return "random-affine";
  }
  return "identity";
}

json synth_config_to_json(const SynthConfig& c) {
  const auto& b = c.transform_spec.bounds;
  return {{"seed", c.seed},
          {"n_changes", c.n_changes},
          {"n_distractors_per_side", c.n_distractors_per_side},
          {"transform_spec",
           {{"kind", transform_spec_name(c.transform_spec.kind)},
            {"dx", c.transform_spec.dx},
            {"dy", c.transform_spec.dy},
            {"affine", c.transform_spec.affine},
            {"bounds",
             {{"max_rotation_deg", b.max_rotation_deg},
              {"min_scale", b.min_scale},
              {"max_scale", b.max_scale},
              {"max_shear", b.max_shear},
              {"max_translation", b.max_translation}}}}},
          {"embedding_noise_sigma", c.embedding_noise_sigma},
          {"score_range_tp", {c.score_range_tp.lo, c.score_range_tp.hi}},
          {"score_range_fp", {c.score_range_fp.lo, c.score_range_fp.hi}},
          {"n_point_matches", c.n_point_matches},
          {"point_outlier_fraction", c.point_outlier_fraction},
          {"point_noise_sigma", c.point_noise_sigma},
          {"box_jitter_sigma", c.box_jitter_sigma},
          {"image_extent", {c.image_extent.width, c.image_extent.height}},
          {"grid_shape", {c.grid_shape.rows, c.grid_shape.cols, c.grid_shape.dim}},
          {"box_size", {c.box_size.lo, c.box_size.hi}},
          {"emit_transform", c.emit_transform},
          {"transform_corruption", c.transform_corruption}};
}

void add_pipeline_flags(CLI::App* sub, PipelineConfig& cfg, std::string& kind, bool& no_align,
                        bool& no_hungarian) {
  sub->add_option("--threshold", cfg.detection_threshold, "Detection score threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_flag("--no-align", no_align, "Skip the alignment stage");
  sub->add_flag("--no-hungarian", no_hungarian, "Skip correspondence matching");
  sub->add_option("--transform", kind, "Transform model for alignment")
      ->check(CLI::IsMember({"affine", "homography"}))
      ->capture_default_str();
  sub->add_option("--ransac-threshold", cfg.ransac.inlier_threshold, "RANSAC inlier threshold (px)")
      ->capture_default_str();
  sub->add_option("--ransac-iters", cfg.ransac.max_iterations, "RANSAC iterations")
      ->capture_default_str();
  sub->add_option("--ransac-min-inliers", cfg.ransac.min_inliers, "Minimum RANSAC consensus")
      ->capture_default_str();
  sub->add_option("--seed", cfg.ransac.seed, "Seed for all randomness")->capture_default_str();
}

void finish_pipeline_flags(PipelineConfig& cfg, const std::string& kind, bool no_align,
                           bool no_hungarian) {
  cfg.transform_kind = kind == "homography" ? TransformKind::Homography : TransformKind::Affine;
  cfg.alignment_enabled = !no_align;
  cfg.hungarian_enabled = !no_hungarian;
}

}  // namespace

std::vector<fs::path> collect_scene_paths(const SceneSource& source) {
  std::vector<fs::path> paths;
  if (source.manifest) {
    const json doc = read_json_file(*source.manifest);
    if (!doc.is_object() || !doc.contains("scenes") || !doc.at("scenes").is_array())
      throw Error(ErrorCode::ParseError, source.manifest->string() + ": manifest needs a 'scenes' array");
    for (const auto& entry : doc.at("scenes")) {
      if (!entry.is_string())
        throw Error(ErrorCode::ParseError, source.manifest->string() + ": scene entries are strings");
      paths.push_back(source.manifest->parent_path() / entry.get<std::string>());
    }
  }
  paths.insert(paths.end(), source.scene_paths.begin(), source.scene_paths.end());
  return paths;
}

int cmd_match(const MatchOptions& opts, std::ostream& out, std::ostream& log) {
  std::vector<fs::path> paths;
  try {
    validate(opts.config);
    paths = collect_scene_paths(opts.source);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }

  std::vector<json> records(paths.size());
  parallel_for(paths.size(), opts.jobs, [&](std::size_t i) {
    try {
      const Scene scene = read_scene_file(paths[i]);
      const PipelineResult result = run_pipeline(scene, opts.config);
      records[i] = {{"scene_path", paths[i].string()},
                    {"config", config_to_json(opts.config)},
                    {"result", result_to_json(result)}};
    } catch (const std::exception& e) {
      records[i] = error_record(failure_from(paths[i], e));
    }
  });

  std::size_t failures = 0;
  try {
    Sink sink(opts.output, out);
    for (const auto& r : records) {
      if (r.contains("error")) {
        ++failures;
        log << "error: " << r.at("error").at("message").get<std::string>() << '\n';
      }
      sink.stream() << r.dump() << '\n';
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
  log << "matched " << (records.size() - failures) << "/" << records.size() << " scenes\n";
  return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& log) {
  std::vector<fs::path> paths;
  PipelineConfig config = opts.config;
  std::map<std::string, json> predictions;
  std::map<std::string, SceneFailure> prediction_failures;
  try {
    validate(config);
    paths = collect_scene_paths(opts.source);
    if (paths.empty()) throw Error(ErrorCode::EmptyDataset, "no scenes given");

    if (opts.predictions) {
      std::ifstream in(*opts.predictions);
      if (!in) throw Error(ErrorCode::FileNotFound, opts.predictions->string());
      std::optional<json> shared_config;
      std::string line;
      for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        json record;
        try {
          record = json::parse(line);
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::ParseError,
                      opts.predictions->string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        const std::string scene_path = record.value("scene_path", std::string{});
        if (record.contains("error")) {
          prediction_failures[scene_path] = {scene_path, ErrorCode::InvalidArgument,
                                             record.at("error").value("message", std::string{})};
          continue;
        }
        if (!record.contains("config") || !record.contains("result"))
          throw Error(ErrorCode::ParseError, opts.predictions->string() + ": line " +
                                                 std::to_string(lineno) + ": not a match record");
        if (!shared_config) {
          shared_config = record.at("config");
        } else if (*shared_config != record.at("config")) {
          throw Error(ErrorCode::MixedConfig, opts.predictions->string() + ": line " +
                                                  std::to_string(lineno) +
                                                  " was produced under different flags");
        }
        predictions[record.at("result").at("scene_id").get<std::string>()] = record.at("result");
      }
      if (shared_config) config = config_from_json(*shared_config);
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }

  std::vector<std::optional<SceneEvaluation>> evaluated(paths.size());
  std::vector<std::optional<SceneFailure>> failed(paths.size());
  parallel_for(paths.size(), opts.jobs, [&](std::size_t i) {
    try {
      const Scene scene = read_scene_file(paths[i]);
      PipelineResult result;
      if (opts.predictions) {
        const auto it = predictions.find(scene.scene_id);
        if (it == predictions.end()) {
          const auto f = prediction_failures.find(paths[i].string());
          if (f != prediction_failures.end()) {
            failed[i] = f->second;
            return;
          }
          throw Error(ErrorCode::InvalidArgument, "no prediction record for scene '" + scene.scene_id + "'");
        }
        result = result_from_json(it->second);
      } else {
        result = run_pipeline(scene, config);
      }
      evaluated[i] = evaluate_scene(scene, result, paths[i].string());
    } catch (const std::exception& e) {
      failed[i] = failure_from(paths[i], e);
    }
  });

  std::vector<SceneEvaluation> per_scene;
  std::vector<SceneFailure> failures;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (evaluated[i]) per_scene.push_back(std::move(*evaluated[i]));
    if (failed[i]) {
      log << "error: " << failed[i]->message << '\n';
      failures.push_back(std::move(*failed[i]));
    }
  }

  try {
    const EvalReport report = aggregate_report(config, std::move(per_scene), std::move(failures));
    Sink sink(opts.output, out);
    sink.stream() << report_to_json(report).dump(1) << '\n';
    log << "evaluated " << report.per_scene.size() << "/" << paths.size() << " scenes\n";
    return report.errors.empty() ? 0 : 1;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_synth(const SynthOptions& opts, std::ostream& log) {
  std::vector<fs::path> written;
  const auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };
  try {
    validate(opts.config);
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + opts.out_dir.string() + ": " + ec.message());

    json names = json::array();
    for (std::size_t i = 0; i < opts.n_scenes; ++i) {
      const std::string stem = "scene_" + std::to_string(opts.config.seed) + "_" + std::to_string(i);
      Scene scene;
      try {
        scene = generate_scene(scene_config(opts.config, i));
      } catch (const Error& e) {
        throw e.with_context(stem);
      }
      scene.scene_id = stem;
      const fs::path path = opts.out_dir / (stem + ".json");
      written.push_back(path);
      written.push_back(opts.out_dir / (stem + "_left.f32"));
      written.push_back(opts.out_dir / (stem + "_right.f32"));
      write_scene_file(path, scene);
      names.push_back(stem + ".json");
    }
    const json manifest = {{"config", synth_config_to_json(opts.config)},
                           {"n_scenes", opts.n_scenes},
                           {"scenes", names}};
    const fs::path manifest_path = opts.out_dir / "manifest.json";
    written.push_back(manifest_path);
    write_json_file(manifest_path, manifest);
  } catch (const Error& e) {
    cleanup();
    log << "error: " << e.what() << '\n';
    return 1;
  }
  log << "wrote " << opts.n_scenes << " scenes to " << opts.out_dir.string() << '\n';
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Change-correspondence post-processing and evaluation"};
  app.require_subcommand(1);

  std::vector<std::string> scene_args;
  std::string manifest, output, kind = "affine";
  bool no_align = false, no_hungarian = false;
  std::size_t jobs = 1;

  MatchOptions match;
  auto* match_cmd = app.add_subcommand("match", "Run the pipeline and print one record per scene");
  match_cmd->add_option("scenes", scene_args, "Scene files");
  match_cmd->add_option("--manifest", manifest, "Manifest listing scene files");
  match_cmd->add_option("-o,--output", output, "Write records here instead of stdout");
  match_cmd->add_option("-j,--jobs", jobs, "Scenes processed concurrently")->check(CLI::PositiveNumber);
  add_pipeline_flags(match_cmd, match.config, kind, no_align, no_hungarian);

  EvaluateOptions evaluate;
  std::string predictions;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute mAP, correspondence F1 and no-change rate");
  eval_cmd->add_option("scenes", scene_args, "Scene files");
  eval_cmd->add_option("--manifest", manifest, "Manifest listing scene files");
  eval_cmd->add_option("--predictions", predictions, "Match records to score instead of re-running");
  eval_cmd->add_option("-o,--output", output, "Write the report here instead of stdout");
  eval_cmd->add_option("-j,--jobs", jobs, "Scenes processed concurrently")->check(CLI::PositiveNumber);
  add_pipeline_flags(eval_cmd, evaluate.config, kind, no_align, no_hungarian);

  SynthOptions synth;
  auto& sc = synth.config;
  std::string spec = "identity", out_dir;
  std::vector<double> extent, box_size, tp_scores, fp_scores, affine;
  std::vector<std::size_t> grid;
  bool no_transform = false;
  double dx = 0.0, dy = 0.0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic scenes");
  synth_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  synth_cmd->add_option("--n-scenes", synth.n_scenes, "Number of scenes")->capture_default_str();
  synth_cmd->add_option("--seed", sc.seed, "Base seed")->capture_default_str();
  synth_cmd->add_option("--n-changes", sc.n_changes, "Changes per scene")->capture_default_str();
  synth_cmd->add_option("--distractors", sc.n_distractors_per_side, "False positives per side")
      ->capture_default_str();
  synth_cmd->add_option("--transform", spec, "Ground-truth transform")
      ->check(CLI::IsMember({"identity", "translation", "affine", "random-affine"}))
      ->capture_default_str();
  synth_cmd->add_option("--dx", dx, "Translation x (px)");
  synth_cmd->add_option("--dy", dy, "Translation y (px)");
  synth_cmd->add_option("--affine", affine, "Fixed affine a b tx c d ty")->expected(6);
  synth_cmd->add_option("--embedding-noise", sc.embedding_noise_sigma, "Embedding noise sigma")
      ->capture_default_str();
  synth_cmd->add_option("--jitter", sc.box_jitter_sigma, "Detection jitter sigma (px)")
      ->capture_default_str();
  synth_cmd->add_option("--n-point-matches", sc.n_point_matches, "Point matches per scene")
      ->capture_default_str();
  synth_cmd->add_option("--outlier-fraction", sc.point_outlier_fraction, "Outlier share of matches")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_cmd->add_option("--point-noise", sc.point_noise_sigma, "Inlier match noise sigma (px)")
      ->capture_default_str();
  synth_cmd->add_option("--corruption", sc.transform_corruption, "Perturbation of the recorded transform")
      ->capture_default_str();
  synth_cmd->add_option("--extent", extent, "Image width height")->expected(2);
  synth_cmd->add_option("--grid", grid, "Grid rows cols dim")->expected(3);
  synth_cmd->add_option("--box-size", box_size, "Box side range lo hi (px)")->expected(2);
  synth_cmd->add_option("--tp-scores", tp_scores, "Score range of true detections")->expected(2);
  synth_cmd->add_option("--fp-scores", fp_scores, "Score range of distractors")->expected(2);
  synth_cmd->add_flag("--no-transform", no_transform, "Leave the transform out of the scene files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, log);
  }

  const auto source = [&] {
    SceneSource s;
    for (const auto& a : scene_args) s.scene_paths.emplace_back(a);
    if (!manifest.empty()) s.manifest = manifest;
    return s;
  };

  if (match_cmd->parsed()) {
    finish_pipeline_flags(match.config, kind, no_align, no_hungarian);
    match.source = source();
    if (!output.empty()) match.output = output;
    match.jobs = jobs;
    return cmd_match(match, out, log);
  }
  if (eval_cmd->parsed()) {
    finish_pipeline_flags(evaluate.config, kind, no_align, no_hungarian);
    evaluate.source = source();
    if (!predictions.empty()) evaluate.predictions = predictions;
    if (!output.empty()) evaluate.output = output;
    evaluate.jobs = jobs;
    return cmd_evaluate(evaluate, out, log);
  }

  synth.out_dir = out_dir;
  if (spec == "translation") sc.transform_spec = TransformSpec::translation(dx, dy);
  if (spec == "random-affine") sc.transform_spec = TransformSpec::random_affine();
  if (spec == "affine") {
    if (affine.size() != 6) {
      log << "error: --transform affine needs --affine with 6 values\n";
      return 2;
    }
    sc.transform_spec = TransformSpec::fixed_affine({affine[0], affine[1], affine[2], affine[3], affine[4], affine[5]});
  }
  if (extent.size() == 2) sc.image_extent = {extent[0], extent[1]};
  if (grid.size() == 3) sc.grid_shape = {grid[0], grid[1], grid[2]};
  if (box_size.size() == 2) sc.box_size = {box_size[0], box_size[1]};
  if (tp_scores.size() == 2) sc.score_range_tp = {tp_scores[0], tp_scores[1]};
  if (fp_scores.size() == 2) sc.score_range_fp = {fp_scores[0], fp_scores[1]};
  sc.emit_transform = !no_transform;
  return cmd_synth(synth, log);
}

}  // namespace chgcorr::cli
