// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "chgcorr/error.hpp"

namespace chgcorr {

namespace {

struct RankedOutcome {
  double score = 0.0;
  std::size_t side = 0;
  std::size_t rank = 0;
  bool true_positive = false;
};

std::vector<std::size_t> top_k_order(std::span<const BoundingBox> preds, std::size_t k) {
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (!preds[i].score)
      throw Error(ErrorCode::MissingScore, "prediction " + std::to_string(i) + " has no score");
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *preds[a].score > *preds[b].score;
  });
  if (order.size() > k) order.resize(k);
  return order;
}

// Greedy matching of one image's ranked predictions against its ground truth.
std::vector<RankedOutcome> match_side(std::span<const BoundingBox> preds,
                                      std::span<const BoundingBox> gts, double iou_thresh,
                                      std::size_t k, std::size_t side) {
  const auto order = top_k_order(preds, k);
  std::vector<char> taken(gts.size(), 0);
  std::vector<RankedOutcome> out;
  out.reserve(order.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const BoundingBox& p = preds[order[rank]];
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double overlap = iou(p, gts[g]);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    const bool tp = best_gt < gts.size() && best >= iou_thresh;
    if (tp) taken[best_gt] = 1;
    out.push_back({*p.score, side, rank, tp});
  }
  return out;
}

std::vector<PRPoint> sweep(std::vector<RankedOutcome> outcomes, std::size_t n_gt) {
  std::stable_sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.side != b.side) return a.side < b.side;
    return a.rank < b.rank;
  });
  std::vector<PRPoint> curve;
  curve.reserve(outcomes.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].true_positive) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    const double recall = n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
    curve.push_back({i, precision, recall});
  }
  return curve;
}

double area_under(const std::vector<PRPoint>& curve) {
  // Precision envelope: max precision at any recall >= r.
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0, previous_recall = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    ap += (curve[i].recall - previous_recall) * envelope[i];
    previous_recall = curve[i].recall;
  }
  return ap;
}

void check_iou_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, "IoU threshold outside (0, 1]");
}

double pooled_ap(std::span<const BoundingBox> lp, std::span<const BoundingBox> lg,
                 std::span<const BoundingBox> rp, std::span<const BoundingBox> rg,
                 double iou_thresh, std::size_t k) {
  check_iou_threshold(iou_thresh);
  auto outcomes = match_side(lp, lg, iou_thresh, k, 0);
  const auto right = match_side(rp, rg, iou_thresh, k, 1);
  outcomes.insert(outcomes.end(), right.begin(), right.end());
  const std::size_t n_gt = lg.size() + rg.size();
  if (n_gt == 0) return outcomes.empty() ? 1.0 : 0.0;
  return area_under(sweep(std::move(outcomes), n_gt));
}

}  // namespace

std::vector<PRPoint> precision_recall_curve(std::span<const BoundingBox> preds,
                                            std::span<const BoundingBox> gts, double iou_thresh,
                                            std::size_t k) {
  check_iou_threshold(iou_thresh);
  return sweep(match_side(preds, gts, iou_thresh, k, 0), gts.size());
}

double average_precision(std::span<const BoundingBox> preds, std::span<const BoundingBox> gts,
                         double iou_thresh, std::size_t k) {
  return pooled_ap(preds, gts, {}, {}, iou_thresh, k);
}

double scene_average_precision(const ScenePredictions& scene, double iou_thresh, std::size_t k) {
  return pooled_ap(scene.left_preds, scene.gt_left, scene.right_preds, scene.gt_right, iou_thresh, k);
}

double mean_percentage(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyDataset, "no values to average");
  double sum = 0.0;
  for (double v : values) sum += v;
  return 100.0 * sum / static_cast<double>(values.size());
}

double map_over_scenes(std::span<const ScenePredictions> scenes, double iou_thresh, std::size_t k) {
  std::vector<double> aps;
  for (const auto& s : scenes)
    if (s.has_changes()) aps.push_back(scene_average_precision(s, iou_thresh, k));
  if (aps.empty()) throw Error(ErrorCode::EmptyDataset, "no change scenes to evaluate");
  return mean_percentage(aps);
}

F1Report F1Report::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Report r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

F1Report& F1Report::operator+=(const F1Report& other) {
  *this = from_counts(tp + other.tp, fp + other.fp, fn + other.fn);
  return *this;
}

F1Report correspondence_f1(std::span<const CorrespondencePair> pred_pairs,
                           std::span<const BoundingBox> gt_left,
                           std::span<const BoundingBox> gt_right,
                           std::span<const IndexPair> gt_correspondence) {
  for (const auto& g : gt_correspondence)
    if (g.left >= gt_left.size() || g.right >= gt_right.size())
      throw Error(ErrorCode::IndexOutOfRange, "gt correspondence (" + std::to_string(g.left) +
                                                  ", " + std::to_string(g.right) + ")");

  const std::size_t n_pred = pred_pairs.size();
  std::vector<char> is_tp(n_pred, 0);
  std::size_t fn = 0;
  for (const auto& g : gt_correspondence) {
    const BoundingBox& gl = gt_left[g.left];
    const BoundingBox& gr = gt_right[g.right];
    bool touched = false;
    std::size_t winner = n_pred;
    double winner_score = -1.0;
    for (std::size_t p = 0; p < n_pred; ++p) {
      const double li = iou(pred_pairs[p].left_box, gl);
      const double ri = iou(pred_pairs[p].right_box, gr);
      if (li > 0.0 && ri > 0.0) touched = true;
      if (is_tp[p] || li < kCorrespondenceIou || ri < kCorrespondenceIou) continue;
      const double score = std::min(li, ri);
      if (score > winner_score) {
        winner_score = score;
        winner = p;
      }
    }
    if (winner < n_pred) is_tp[winner] = 1;
    if (!touched) ++fn;
  }
  const auto tp = static_cast<std::size_t>(std::count(is_tp.begin(), is_tp.end(), 1));
  return F1Report::from_counts(tp, n_pred - tp, fn);
}

double no_change_rate(std::span<const StageCounts> final_counts) {
  if (final_counts.empty()) throw Error(ErrorCode::EmptyDataset, "no no-change scenes");
  double sum = 0.0;
  for (const auto& c : final_counts) sum += static_cast<double>(c.left + c.right) / 2.0;
  return sum / static_cast<double>(final_counts.size());
}

double no_change_rate(std::span<const Scene> scenes, std::span<const PipelineResult> results) {
  if (scenes.size() != results.size())
    throw Error(ErrorCode::InvalidArgument, "scene and result counts differ");
  std::vector<StageCounts> counts;
  counts.reserve(results.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (!scenes[i].is_no_change())
      throw Error(ErrorCode::ChangeSceneInNoChangeSet, "scene '" + scenes[i].scene_id + "'");
    counts.push_back(results[i].diagnostics.final_boxes);
  }
  return no_change_rate(counts);
}

}  // namespace chgcorr
