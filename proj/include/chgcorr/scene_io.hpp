// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "chgcorr/embeddings.hpp"
#include "chgcorr/pipeline.hpp"

namespace chgcorr {

using json = nlohmann::json;

// Scene document layout:
//   scene_id, image_extent: [w, h] or {left: [w, h], right: [w, h]},
//   detections: {left, right: [[x1, y1, x2, y2, score], ...]},
//   gt: {left, right: [[x1, y1, x2, y2], ...], correspondence: [[li, ri], ...]},
//   point_matches: [[lx, ly, rx, ry(, weight)], ...]         (optional)
//   transform: {kind: "affine" | "homography", matrix: [...]} (optional)
//   grids: {left, right: {rows, cols, dim, data_path}}        (optional)
// Grid data lives in a sidecar of little-endian float32, (row, col, channel)
// order; data_path is relative to the scene file's directory.

json transform_to_json(const Transform& t);
Transform transform_from_json(const json& j, const std::string& where = "transform");

json box_to_json(const BoundingBox& b);

// `left_data_path` / `right_data_path` are stored verbatim in the grid
// entries; grids are omitted when the scene has none.
json scene_to_json(const Scene& scene, const std::string& left_data_path = {},
                   const std::string& right_data_path = {});

// `base_dir` resolves grid data paths. `source` names the document in errors.
Scene scene_from_json(const json& doc, const std::filesystem::path& base_dir,
                      const std::string& source = "<memory>");

// Writes `path` plus `<stem>_left.f32` / `<stem>_right.f32` when the scene
// has grids. Throws IoError.
void write_scene_file(const std::filesystem::path& path, const Scene& scene);

// Throws FileNotFound, ParseError (with path and location) or the Scene
// validation errors.
Scene read_scene_file(const std::filesystem::path& path);

void write_grid_sidecar(const std::filesystem::path& path, const FeatureGrid& grid);
FeatureGrid read_grid_sidecar(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                              std::size_t dim, ImageExtent extent);

json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const json& j);

json diagnostics_to_json(const PipelineDiagnostics& d);
PipelineDiagnostics diagnostics_from_json(const json& j);

json result_to_json(const PipelineResult& result);
PipelineResult result_from_json(const json& j);

// Parse a whole file as JSON; FileNotFound / ParseError.
json read_json_file(const std::filesystem::path& path);
// Serialise with stable (sorted) key order and a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace chgcorr
