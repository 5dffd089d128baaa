// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/evaluation.hpp"

#include <string>

namespace chgcorr {

namespace {

json f1_to_json(const F1Report& r) {
  return {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn},
          {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

F1Report f1_from_json(const json& j) {
  return F1Report::from_counts(j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                               j.at("fn").get<std::size_t>());
}

ErrorCode code_from_string(const std::string& s) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::MixedConfig); ++c)
    if (to_string(static_cast<ErrorCode>(c)) == s) return static_cast<ErrorCode>(c);
  throw Error(ErrorCode::ParseError, "unknown error code '" + s + "'");
}

}  // namespace

SceneEvaluation evaluate_scene(const Scene& scene, const PipelineResult& result,
                               const std::string& path) {
  SceneEvaluation eval;
  eval.scene_id = scene.scene_id;
  eval.path = path;
  eval.change = !scene.is_no_change();
  eval.final_boxes = result.diagnostics.final_boxes;
  eval.diagnostics = result.diagnostics;
  if (eval.change) {
    ScenePredictions preds{result.final_left(), result.final_right(), scene.gt_left, scene.gt_right};
    eval.ap = scene_average_precision(preds);
    eval.f1 = correspondence_f1(result.pairs, scene.gt_left, scene.gt_right, scene.gt_correspondence);
  }
  return eval;
}

EvalReport aggregate_report(const PipelineConfig& config, std::vector<SceneEvaluation> per_scene,
                            std::vector<SceneFailure> errors) {
  EvalReport report;
  report.config = config;
  std::vector<double> aps;
  std::vector<StageCounts> quiet;
  F1Report f1;
  bool any_change = false;
  for (const auto& s : per_scene) {
    if (s.change) {
      any_change = true;
      if (s.ap) aps.push_back(*s.ap);
      if (s.f1) f1 += *s.f1;
    } else {
      quiet.push_back(s.final_boxes);
    }
  }
  if (any_change) {
    if (!aps.empty()) report.map = mean_percentage(aps);
    report.f1 = f1;
  }
  if (!quiet.empty()) report.no_change_rate = no_change_rate(quiet);
  report.per_scene = std::move(per_scene);
  report.errors = std::move(errors);
  return report;
}

json report_to_json(const EvalReport& report) {
  json doc;
  doc["config"] = config_to_json(report.config);
  std::size_t change = 0;
  for (const auto& s : report.per_scene) change += s.change ? 1 : 0;
  doc["counts"] = {{"scenes", report.per_scene.size() + report.errors.size()},
                   {"evaluated", report.per_scene.size()},
                   {"change_scenes", change},
                   {"no_change_scenes", report.per_scene.size() - change},
                   {"errors", report.errors.size()}};
  json notes = json::array();
  if (report.map) doc["map"] = *report.map;
  if (report.f1) doc["f1"] = f1_to_json(*report.f1);
  if (!report.f1 && !report.map) notes.push_back("no change scenes");
  if (report.no_change_rate) {
    doc["no_change_rate"] = *report.no_change_rate;
  } else {
    notes.push_back("no no-change scenes");
  }
  doc["notes"] = notes;

  json scenes = json::array();
  for (const auto& s : report.per_scene) {
    json entry = {{"scene_id", s.scene_id},
                  {"path", s.path},
                  {"kind", s.change ? "change" : "no_change"},
                  {"final_boxes", {{"left", s.final_boxes.left}, {"right", s.final_boxes.right}}},
                  {"diagnostics", diagnostics_to_json(s.diagnostics)}};
    if (s.ap) entry["ap"] = *s.ap;
    if (s.f1) entry["f1"] = f1_to_json(*s.f1);
    scenes.push_back(entry);
  }
  doc["per_scene"] = scenes;

  json errors = json::array();
  for (const auto& e : report.errors)
    errors.push_back({{"path", e.path}, {"code", to_string(e.code)}, {"message", e.message}});
  doc["errors"] = errors;
  return doc;
}

EvalReport report_from_json(const json& doc) {
  try {
    std::vector<SceneEvaluation> scenes;
    for (const auto& entry : doc.at("per_scene")) {
      SceneEvaluation s;
      s.scene_id = entry.at("scene_id").get<std::string>();
      s.path = entry.at("path").get<std::string>();
      s.change = entry.at("kind").get<std::string>() == "change";
      s.final_boxes = {entry.at("final_boxes").at("left").get<std::size_t>(),
                       entry.at("final_boxes").at("right").get<std::size_t>()};
      s.diagnostics = diagnostics_from_json(entry.at("diagnostics"));
      if (entry.contains("ap")) s.ap = entry.at("ap").get<double>();
      if (entry.contains("f1")) s.f1 = f1_from_json(entry.at("f1"));
      scenes.push_back(std::move(s));
    }
    std::vector<SceneFailure> errors;
    for (const auto& e : doc.at("errors"))
      errors.push_back({e.at("path").get<std::string>(), code_from_string(e.at("code").get<std::string>()),
                        e.at("message").get<std::string>()});
    EvalReport report = aggregate_report(config_from_json(doc.at("config")), std::move(scenes),
                                         std::move(errors));
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report: ") + e.what());
  }
}

}  // namespace chgcorr
