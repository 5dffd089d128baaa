// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "chgcorr/error.hpp"

namespace chgcorr {

namespace {

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_context(stage);
  }
}

std::vector<BoundingBox> pick(std::span<const BoundingBox> boxes,
                              const std::vector<std::size_t>& index) {
  std::vector<BoundingBox> out;
  out.reserve(index.size());
  for (auto i : index) out.push_back(boxes[i]);
  return out;
}

std::vector<Embedding> embed_all(std::span<const BoundingBox> boxes, const FeatureGrid& grid,
                                 const char* side) {
  std::vector<Embedding> out;
  out.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    try {
      out.push_back(mean_pool_embedding(boxes[i], grid));
    } catch (const Error& e) {
      throw e.with_context(std::string(side) + " box " + std::to_string(i));
    }
  }
  return out;
}

void check_extent(ImageExtent e, const char* what) {
  if (!(e.width > 0.0) || !(e.height > 0.0) || !std::isfinite(e.width) || !std::isfinite(e.height))
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive and finite");
}

}  // namespace

void validate(const Scene& scene) {
  check_extent(scene.left_extent, "left image extent");
  check_extent(scene.right_extent, "right image extent");
  for (const auto* list : {&scene.left_detections, &scene.right_detections, &scene.gt_left,
                           &scene.gt_right})
    for (const auto& b : *list) validate(b);
  for (const auto& m : scene.point_matches) validate(m);

  std::set<std::size_t> seen_left, seen_right;
  for (const auto& p : scene.gt_correspondence) {
    if (p.left >= scene.gt_left.size() || p.right >= scene.gt_right.size())
      throw Error(ErrorCode::IndexOutOfRange, "gt correspondence (" + std::to_string(p.left) +
                                                  ", " + std::to_string(p.right) + ")");
    if (!seen_left.insert(p.left).second || !seen_right.insert(p.right).second)
      throw Error(ErrorCode::InvalidArgument, "gt box used by more than one correspondence");
  }
}

void validate(const PipelineConfig& cfg) {
  if (!(cfg.detection_threshold >= 0.0 && cfg.detection_threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "detection threshold outside [0, 1]");
  validate(cfg.ransac, cfg.transform_kind);
}

std::vector<BoundingBox> PipelineResult::final_left() const {
  if (!diagnostics.hungarian_applied) return stage2_left;
  std::vector<BoundingBox> out;
  for (const auto& p : pairs) out.push_back(p.left_box);
  return out;
}

std::vector<BoundingBox> PipelineResult::final_right() const {
  if (!diagnostics.hungarian_applied) return stage2_right;
  std::vector<BoundingBox> out;
  for (const auto& p : pairs) out.push_back(p.right_box);
  return out;
}

std::vector<std::size_t> threshold_indices(std::span<const BoundingBox> dets, double threshold) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!dets[i].score)
      throw Error(ErrorCode::MissingScore, "detection " + std::to_string(i) + " has no score");
    if (*dets[i].score >= threshold) kept.push_back(i);
  }
  return kept;
}

std::vector<BoundingBox> threshold_detections(std::span<const BoundingBox> dets, double threshold) {
  return pick(dets, threshold_indices(dets, threshold));
}

AlignedBoxes align_filter(std::span<const BoundingBox> left, std::span<const BoundingBox> right,
                          const Transform& t, ImageExtent left_extent, ImageExtent right_extent) {
  const Transform back = t.inverse();
  const auto survivors = [](std::span<const BoundingBox> from, std::span<const BoundingBox> to,
                            const Transform& map, ImageExtent to_extent) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < from.size(); ++i) {
      std::optional<BoundingBox> projected;
      try {
        projected = project_box(map, from[i], to_extent);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularProjection) throw;
      }
      if (!projected) continue;
      const bool overlaps = std::any_of(to.begin(), to.end(), [&](const BoundingBox& other) {
        return iou(*projected, other) > 0.0;
      });
      if (overlaps) kept.push_back(i);
    }
    return kept;
  };

  AlignedBoxes out;
  out.left_index = survivors(left, right, t, right_extent);
  out.right_index = survivors(right, left, back, left_extent);
  out.left = pick(left, out.left_index);
  out.right = pick(right, out.right_index);
  return out;
}

std::vector<CorrespondencePair> predict_correspondences(std::span<const BoundingBox> left,
                                                        std::span<const BoundingBox> right,
                                                        const FeatureGrid& left_grid,
                                                        const FeatureGrid& right_grid) {
  if (left.empty() || right.empty()) return {};
  const auto left_emb = embed_all(left, left_grid, "left");
  const auto right_emb = embed_all(right, right_grid, "right");
  const Assignment assignment = hungarian(cost_matrix(left_emb, right_emb));
  std::vector<CorrespondencePair> pairs;
  pairs.reserve(assignment.pairs.size());
  for (const auto& p : assignment.pairs)
    pairs.push_back({left[p.left], right[p.right], p.cost, p.left, p.right});
  return pairs;
}

PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& cfg) {
  validate(cfg);
  in_stage("scene", [&] { validate(scene); });

  PipelineResult result;
  result.scene_id = scene.scene_id;
  auto& diag = result.diagnostics;
  diag.input = {scene.left_detections.size(), scene.right_detections.size()};

  in_stage("threshold", [&] {
    result.stage1_left = threshold_detections(scene.left_detections, cfg.detection_threshold);
    result.stage1_right = threshold_detections(scene.right_detections, cfg.detection_threshold);
  });
  diag.thresholded = {result.stage1_left.size(), result.stage1_right.size()};

  std::optional<Transform> transform;
  if (cfg.alignment_enabled) {
    if (scene.transform) {
      transform = scene.transform;
      diag.transform_source = TransformSource::Scene;
    } else {
      const std::size_t needed = std::max(minimal_sample_size(cfg.transform_kind),
                                          static_cast<std::size_t>(cfg.ransac.min_inliers));
      if (scene.point_matches.size() < needed)
        throw Error(ErrorCode::TransformUnavailable,
                    "alignment: scene has no transform and " +
                        std::to_string(scene.point_matches.size()) + " point matches (need " +
                        std::to_string(needed) + ")");
      try {
        const auto estimate = estimate_transform(scene.point_matches, cfg.transform_kind, cfg.ransac);
        transform = estimate.transform;
        diag.transform_source = TransformSource::Estimated;
        diag.ransac_inliers = estimate.inlier_count;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConsensus && e.code() != ErrorCode::DegenerateGeometry)
          throw e.with_context("alignment");
        diag.alignment_fallback = e.what();
      }
    }
  }

  if (transform) {
    const AlignedBoxes aligned = in_stage("alignment", [&] {
      return align_filter(result.stage1_left, result.stage1_right, *transform, scene.left_extent,
                          scene.right_extent);
    });
    result.stage2_left = aligned.left;
    result.stage2_right = aligned.right;
    result.stage2_left_index = aligned.left_index;
    result.stage2_right_index = aligned.right_index;
    result.transform_used = transform;
    diag.alignment_applied = true;
  } else {
    result.stage2_left = result.stage1_left;
    result.stage2_right = result.stage1_right;
    for (std::size_t i = 0; i < result.stage1_left.size(); ++i) result.stage2_left_index.push_back(i);
    for (std::size_t i = 0; i < result.stage1_right.size(); ++i)
      result.stage2_right_index.push_back(i);
  }
  diag.aligned = {result.stage2_left.size(), result.stage2_right.size()};

  if (cfg.hungarian_enabled) {
    if (scene.left_grid && scene.right_grid) {
      result.pairs = in_stage("correspondence", [&] {
        return predict_correspondences(result.stage2_left, result.stage2_right, *scene.left_grid,
                                       *scene.right_grid);
      });
      diag.hungarian_applied = true;
    } else {
      diag.hungarian_skipped = "scene has no feature grids";
    }
  }
  diag.pairs = result.pairs.size();
  diag.final_boxes = diag.hungarian_applied ? StageCounts{result.pairs.size(), result.pairs.size()}
                                            : diag.aligned;
  return result;
}

std::vector<PairLabel> label_ground_truth_matches(const Scene& scene) {
  validate(scene);
  if (!scene.left_grid || !scene.right_grid)
    throw Error(ErrorCode::InvalidArgument, "ground-truth labelling needs both feature grids");
  if (scene.gt_left.empty() || scene.gt_right.empty()) return {};
  const auto left = embed_all(scene.gt_left, *scene.left_grid, "left");
  const auto right = embed_all(scene.gt_right, *scene.right_grid, "right");
  const Assignment assignment = hungarian(cost_matrix(left, right));
  return label_pairs(assignment, scene.gt_correspondence, scene.gt_left.size(),
                     scene.gt_right.size());
}

}  // namespace chgcorr
