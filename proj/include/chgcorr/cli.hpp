// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chgcorr/pipeline.hpp"
#include "chgcorr/synth.hpp"

namespace chgcorr::cli {

struct SceneSource {
  std::vector<std::filesystem::path> scene_paths;
  std::optional<std::filesystem::path> manifest;
};

// Scene paths from the manifest (resolved against its directory) followed by
// the explicit ones.
std::vector<std::filesystem::path> collect_scene_paths(const SceneSource& source);

struct MatchOptions {
  SceneSource source;
  PipelineConfig config;
  std::optional<std::filesystem::path> output;
  std::size_t jobs = 1;
};

// One JSON line per scene, in input order: {"scene_path", "config", "result"}
// or {"scene_path", "error": {"code", "message"}}. Returns 0 iff no scene
// failed.
int cmd_match(const MatchOptions& opts, std::ostream& out, std::ostream& log);

struct EvaluateOptions {
  SceneSource source;
  PipelineConfig config;
  // Records written by cmd_match; when set, pipeline results are taken from
  // there instead of being recomputed.
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> output;
  std::size_t jobs = 1;
};

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& log);

struct SynthOptions {
  SynthConfig config;
  std::size_t n_scenes = 1;
  std::filesystem::path out_dir;
};

// Writes scene_<seed>_<index>.json (+ grid sidecars) and manifest.json. On
// failure everything already written is removed and no manifest is left.
int cmd_synth(const SynthOptions& opts, std::ostream& log);

// Parses argv and dispatches to the subcommands above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace chgcorr::cli
