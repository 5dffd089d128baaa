// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chgcorr/error.hpp"
#include "chgcorr/metrics.hpp"
#include "chgcorr/pipeline.hpp"
#include "chgcorr/scene_io.hpp"

namespace chgcorr {

struct SceneEvaluation {
  std::string scene_id;
  std::string path;
  bool change = false;
  // Change scenes only.
  std::optional<double> ap;
  std::optional<F1Report> f1;
  StageCounts final_boxes;
  PipelineDiagnostics diagnostics;

  friend bool operator==(const SceneEvaluation&, const SceneEvaluation&) = default;
};

struct SceneFailure {
  std::string path;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;

  friend bool operator==(const SceneFailure&, const SceneFailure&) = default;
};

// Aggregates are pure reductions over `per_scene`: mAP is the mean change-scene
// AP (percent), F1 is computed from summed counts, and the no-change rate is
// the mean of (left + right) / 2 final boxes over no-change scenes. Each is
// absent when its partition is empty.
struct EvalReport {
  PipelineConfig config;
  std::optional<double> map;
  std::optional<F1Report> f1;
  std::optional<double> no_change_rate;
  std::vector<SceneEvaluation> per_scene;
  std::vector<SceneFailure> errors;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Per-scene metrics for the boxes/pairs surviving the configured stages.
SceneEvaluation evaluate_scene(const Scene& scene, const PipelineResult& result,
                               const std::string& path = {});

EvalReport aggregate_report(const PipelineConfig& config, std::vector<SceneEvaluation> per_scene,
                            std::vector<SceneFailure> errors = {});

json report_to_json(const EvalReport& report);
EvalReport report_from_json(const json& doc);

}  // namespace chgcorr
