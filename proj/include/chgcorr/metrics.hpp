// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chgcorr/assignment.hpp"
#include "chgcorr/geometry.hpp"
#include "chgcorr/pipeline.hpp"

namespace chgcorr {

inline constexpr double kDefaultApIou = 0.5;
inline constexpr std::size_t kDefaultTopK = 100;

struct PRPoint {
  std::size_t rank = 0;
  double precision = 0.0;
  double recall = 0.0;
};

// Precision/recall after each of the top-k predictions (score descending,
// index ascending on ties). Each prediction is matched to the unmatched gt of
// highest IoU provided that IoU reaches `iou_thresh`.
std::vector<PRPoint> precision_recall_curve(std::span<const BoundingBox> preds,
                                            std::span<const BoundingBox> gts, double iou_thresh,
                                            std::size_t k = kDefaultTopK);

// All-point interpolated AP in [0, 1]. With no ground truth the AP is 1 for
// no predictions and 0 otherwise.
double average_precision(std::span<const BoundingBox> preds, std::span<const BoundingBox> gts,
                         double iou_thresh = kDefaultApIou, std::size_t k = kDefaultTopK);

// Predictions and ground truth of one image pair. Each side is ranked and
// truncated to top-k on its own; the two ranked lists are then pooled into
// one PR sweep, with matches only allowed within a side.
struct ScenePredictions {
  std::vector<BoundingBox> left_preds;
  std::vector<BoundingBox> right_preds;
  std::vector<BoundingBox> gt_left;
  std::vector<BoundingBox> gt_right;

  bool has_changes() const { return !gt_left.empty() || !gt_right.empty(); }
};

double scene_average_precision(const ScenePredictions& scene, double iou_thresh = kDefaultApIou,
                               std::size_t k = kDefaultTopK);

// Mean per-scene AP over the change scenes, as a percentage. No-change scenes
// are skipped; EmptyDataset when nothing is left.
double map_over_scenes(std::span<const ScenePredictions> scenes, double iou_thresh = kDefaultApIou,
                       std::size_t k = kDefaultTopK);

// Mean of values given as fractions, times 100. EmptyDataset when empty.
double mean_percentage(std::span<const double> values);

struct F1Report {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static F1Report from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
  F1Report& operator+=(const F1Report& other);

  friend bool operator==(const F1Report&, const F1Report&) = default;
};

inline constexpr double kCorrespondenceIou = 0.5;

// Pair-level scoring of predicted correspondences.
//  * A predicted pair qualifies for a gt pair when both of its boxes reach
//    IoU >= 0.5 with the gt pair's boxes.
//  * Gt pairs are visited in index order; each takes, among the qualifying
//    predictions not yet taken, the one with the highest min(left IoU, right
//    IoU) (lower prediction index on ties). That prediction is a TP.
//  * Every other prediction is an FP.
//  * A gt pair is an FN when no prediction has nonzero IoU with it on both
//    sides.
F1Report correspondence_f1(std::span<const CorrespondencePair> pred_pairs,
                           std::span<const BoundingBox> gt_left,
                           std::span<const BoundingBox> gt_right,
                           std::span<const IndexPair> gt_correspondence);

// Average over scenes of (final left boxes + final right boxes) / 2.
// Throws ChangeSceneInNoChangeSet if any scene has ground truth and
// EmptyDataset when there are no scenes.
double no_change_rate(std::span<const Scene> scenes, std::span<const PipelineResult> results);

// Same reduction over precomputed per-scene box counts.
double no_change_rate(std::span<const StageCounts> final_counts);

}  // namespace chgcorr
