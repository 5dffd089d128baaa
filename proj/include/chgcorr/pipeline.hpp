// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chgcorr/assignment.hpp"
#include "chgcorr/embeddings.hpp"
#include "chgcorr/geometry.hpp"

namespace chgcorr {

// One image pair: detector output for both sides, ground truth with its
// correspondence, and the optional inputs for alignment and matching.
struct Scene {
  std::string scene_id;
  ImageExtent left_extent{256.0, 256.0};
  ImageExtent right_extent{256.0, 256.0};
  std::vector<BoundingBox> left_detections;
  std::vector<BoundingBox> right_detections;
  std::vector<BoundingBox> gt_left;
  std::vector<BoundingBox> gt_right;
  std::vector<IndexPair> gt_correspondence;
  std::vector<PointMatch> point_matches;
  std::optional<Transform> transform;
  std::optional<FeatureGrid> left_grid;
  std::optional<FeatureGrid> right_grid;

  // No ground truth on either side.
  bool is_no_change() const { return gt_left.empty() && gt_right.empty(); }

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Throws InvalidArgument / IndexOutOfRange when a Scene invariant is broken.
void validate(const Scene& scene);

struct PipelineConfig {
  double detection_threshold = 0.25;
  TransformKind transform_kind = TransformKind::Affine;
  RansacConfig ransac;
  bool alignment_enabled = true;
  bool hungarian_enabled = true;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

void validate(const PipelineConfig& cfg);

struct CorrespondencePair {
  BoundingBox left_box;
  BoundingBox right_box;
  double cost = 0.0;
  // Indices into the lists the pair was matched from.
  std::size_t left_index = 0;
  std::size_t right_index = 0;

  friend bool operator==(const CorrespondencePair&, const CorrespondencePair&) = default;
};

enum class TransformSource { None, Scene, Estimated };

struct StageCounts {
  std::size_t left = 0;
  std::size_t right = 0;

  friend bool operator==(const StageCounts&, const StageCounts&) = default;
};

struct PipelineDiagnostics {
  StageCounts input;
  StageCounts thresholded;
  StageCounts aligned;
  // Boxes left standing after the last enabled stage.
  StageCounts final_boxes;
  std::size_t pairs = 0;
  TransformSource transform_source = TransformSource::None;
  std::size_t ransac_inliers = 0;
  bool alignment_applied = false;
  // Set when alignment was requested but estimation failed and the stage was
  // skipped instead of failing the scene.
  std::optional<std::string> alignment_fallback;
  bool hungarian_applied = false;
  // Set when matching was requested but the scene carries no feature grids.
  std::optional<std::string> hungarian_skipped;

  friend bool operator==(const PipelineDiagnostics&, const PipelineDiagnostics&) = default;
};

struct PipelineResult {
  std::string scene_id;
  std::vector<BoundingBox> stage1_left;
  std::vector<BoundingBox> stage1_right;
  std::vector<BoundingBox> stage2_left;
  std::vector<BoundingBox> stage2_right;
  // Positions of the stage-2 boxes inside the stage-1 lists.
  std::vector<std::size_t> stage2_left_index;
  std::vector<std::size_t> stage2_right_index;
  // left_index/right_index refer to the stage-2 lists.
  std::vector<CorrespondencePair> pairs;
  std::optional<Transform> transform_used;
  PipelineDiagnostics diagnostics;

  // The boxes that survive every enabled stage: the paired boxes when
  // matching ran, otherwise the stage-2 lists.
  std::vector<BoundingBox> final_left() const;
  std::vector<BoundingBox> final_right() const;

  friend bool operator==(const PipelineResult&, const PipelineResult&) = default;
};

// Positions of boxes with score >= threshold, in input order. Throws
// MissingScore for a box without a score.
std::vector<std::size_t> threshold_indices(std::span<const BoundingBox> dets, double threshold);
std::vector<BoundingBox> threshold_detections(std::span<const BoundingBox> dets, double threshold);

struct AlignedBoxes {
  std::vector<std::size_t> left_index;
  std::vector<std::size_t> right_index;
  std::vector<BoundingBox> left;
  std::vector<BoundingBox> right;
};

// Keeps a left box when its projection into the right image has IoU > 0 with
// some right box, and a right box when its projection through the inverse
// transform overlaps some left box. Boxes that cannot be projected are
// dropped. Throws NonInvertibleTransform.
AlignedBoxes align_filter(std::span<const BoundingBox> left, std::span<const BoundingBox> right,
                          const Transform& t, ImageExtent left_extent, ImageExtent right_extent);

// Mean-pooled embeddings, cosine cost matrix, Hungarian matching. Empty when
// either side is empty.
std::vector<CorrespondencePair> predict_correspondences(std::span<const BoundingBox> left,
                                                        std::span<const BoundingBox> right,
                                                        const FeatureGrid& left_grid,
                                                        const FeatureGrid& right_grid);

// Threshold, align, match. Stage failures are rethrown with the stage name
// prepended; a failed RANSAC consensus skips alignment instead (recorded in
// the diagnostics).
PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& cfg);

// Labels for training a pair classifier: Hungarian matching on the
// ground-truth boxes, each matched pair marked against the ground-truth
// correspondence.
std::vector<PairLabel> label_ground_truth_matches(const Scene& scene);

}  // namespace chgcorr
