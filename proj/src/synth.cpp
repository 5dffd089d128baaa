// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "chgcorr/error.hpp"
#include "chgcorr/rng.hpp"

namespace chgcorr {

namespace {

void check_range(ValueRange r, double lo, double hi, const char* name) {
  if (!(r.lo >= lo && r.hi <= hi && r.lo <= r.hi))
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not a valid range");
}

bool overlaps_any(const BoundingBox& box, const std::vector<BoundingBox>& others) {
  return std::any_of(others.begin(), others.end(),
                     [&](const BoundingBox& o) { return intersection_area(box, o) > 0.0; });
}

bool inside(const BoundingBox& b, ImageExtent e) {
  return b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= e.width && b.y2 <= e.height;
}

BoundingBox random_box(SplitMix64& rng, const SynthConfig& cfg) {
  const double w = rng.uniform(cfg.box_size.lo, cfg.box_size.hi);
  const double h = rng.uniform(cfg.box_size.lo, cfg.box_size.hi);
  const double x = rng.uniform(0.0, std::max(0.0, cfg.image_extent.width - w));
  const double y = rng.uniform(0.0, std::max(0.0, cfg.image_extent.height - h));
  return {x, y, x + w, y + h, {}};
}

// Projection that never throws: boxes that cannot be mapped overlap nothing.
std::optional<BoundingBox> try_project(const Transform& t, const BoundingBox& b, ImageExtent e) {
  try {
    return project_box(t, b, e);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::set<GridCell> cells_of(const BoundingBox& b, const FeatureGrid& layout) {
  try {
    const auto cells = patch_indices(b, layout);
    return {cells.begin(), cells.end()};
  } catch (const Error&) {
    return {};
  }
}

bool shares_cell(const std::set<GridCell>& a, const std::vector<std::set<GridCell>>& others) {
  for (const auto& o : others)
    for (const auto& c : a)
      if (o.contains(c)) return true;
  return false;
}

BoundingBox jitter(SplitMix64& rng, const BoundingBox& b, double sigma, ImageExtent e) {
  if (sigma <= 0.0) return b;
  for (int attempt = 0; attempt < 100; ++attempt) {
    BoundingBox j{std::clamp(b.x1 + rng.normal(0.0, sigma), 0.0, e.width),
                  std::clamp(b.y1 + rng.normal(0.0, sigma), 0.0, e.height),
                  std::clamp(b.x2 + rng.normal(0.0, sigma), 0.0, e.width),
                  std::clamp(b.y2 + rng.normal(0.0, sigma), 0.0, e.height),
                  {}};
    if (j.has_positive_area()) return j;
  }
  return b;
}

std::vector<double> unit_direction(SplitMix64& rng, std::size_t dim) {
  for (;;) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    if (norm > 0.0) {
      for (auto& x : v) x /= std::sqrt(norm);
      return v;
    }
  }
}

FeatureGrid build_grid(SplitMix64& rng, const SynthConfig& cfg,
                       const std::vector<std::vector<double>>& directions,
                       const std::vector<std::set<GridCell>>& box_cells) {
  const auto& g = cfg.grid_shape;
  std::vector<float> data(g.rows * g.cols * g.dim);
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) {
      // Direction 0 is the background; pair k uses direction k + 1.
      std::size_t which = 0;
      for (std::size_t k = 0; k < box_cells.size(); ++k)
        if (box_cells[k].contains(GridCell{r, c})) which = k + 1;
      float* cell = data.data() + (r * g.cols + c) * g.dim;
      for (std::size_t d = 0; d < g.dim; ++d) {
        double v = directions[which][d];
        if (cfg.embedding_noise_sigma > 0.0) v += rng.normal(0.0, cfg.embedding_noise_sigma);
        cell[d] = static_cast<float>(v);
      }
    }
  return FeatureGrid(g.rows, g.cols, g.dim, std::move(data), cfg.image_extent);
}

Transform corrupt(SplitMix64& rng, const Transform& t, double amount, ImageExtent e) {
  if (amount <= 0.0) return t;
  const double span = std::max(e.width, e.height);
  const auto& m = t.matrix();
  return Transform::affine({m[0] + amount * rng.uniform(-1.0, 1.0),
                            m[1] + amount * rng.uniform(-1.0, 1.0),
                            m[2] + amount * span * rng.uniform(-1.0, 1.0),
                            m[3] + amount * rng.uniform(-1.0, 1.0),
                            m[4] + amount * rng.uniform(-1.0, 1.0),
                            m[5] + amount * span * rng.uniform(-1.0, 1.0)});
}

Transform draw_transform(SplitMix64& rng, const SynthConfig& cfg) {
  const auto& spec = cfg.transform_spec;
  switch (spec.kind) {
    case TransformSpec::Kind::Identity: return Transform::identity();
    case TransformSpec::Kind::Translation: return Transform::translation(spec.dx, spec.dy);
    case TransformSpec::Kind::Affine: return Transform::affine(spec.affine);
    case TransformSpec::Kind::RandomAffine: break;
  }
  const auto& b = spec.bounds;
  const double theta = rng.uniform(-b.max_rotation_deg, b.max_rotation_deg) * std::numbers::pi / 180.0;
  const double scale = rng.uniform(b.min_scale, b.max_scale);
  const double shear = rng.uniform(-b.max_shear, b.max_shear);
  const double tx = rng.uniform(-b.max_translation, b.max_translation);
  const double ty = rng.uniform(-b.max_translation, b.max_translation);
  // Linear part R(theta) * [[s, shear], [0, s]] applied about the image centre.
  const double c = std::cos(theta), s = std::sin(theta);
  const double a00 = c * scale, a01 = c * shear - s * scale;
  const double a10 = s * scale, a11 = s * shear + c * scale;
  const double cx = cfg.image_extent.width / 2.0, cy = cfg.image_extent.height / 2.0;
  return Transform::affine({a00, a01, cx + tx - a00 * cx - a01 * cy,
                            a10, a11, cy + ty - a10 * cx - a11 * cy});
}

[[noreturn]] void infeasible(const SynthConfig& cfg, const std::string& what) {
  throw Error(ErrorCode::PlacementInfeasible,
              what + " (seed " + std::to_string(cfg.seed) + ", " +
                  std::to_string(kPlacementAttempts) + " attempts)");
}

}  // namespace

void validate(const SynthConfig& cfg) {
  check_range(cfg.score_range_tp, 0.0, 1.0, "score_range_tp");
  check_range(cfg.score_range_fp, 0.0, 1.0, "score_range_fp");
  if (!(cfg.box_size.lo > 0.0 && cfg.box_size.lo <= cfg.box_size.hi))
    throw Error(ErrorCode::InvalidArgument, "box_size is not a valid range");
  if (!(cfg.point_outlier_fraction >= 0.0 && cfg.point_outlier_fraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "point_outlier_fraction outside [0, 1]");
  if (!(cfg.embedding_noise_sigma >= 0.0) || !(cfg.box_jitter_sigma >= 0.0) ||
      !(cfg.point_noise_sigma >= 0.0) || !(cfg.transform_corruption >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "noise levels must be >= 0");
  if (!(cfg.image_extent.width > 0.0 && cfg.image_extent.height > 0.0))
    throw Error(ErrorCode::InvalidArgument, "image extent must be positive");
  if (cfg.grid_shape.rows == 0 || cfg.grid_shape.cols == 0 || cfg.grid_shape.dim == 0)
    throw Error(ErrorCode::InvalidArgument, "grid shape must be >= 1 in every dimension");
  const auto& b = cfg.transform_spec.bounds;
  if (cfg.transform_spec.kind == TransformSpec::Kind::RandomAffine &&
      !(b.min_scale > 0.0 && b.min_scale <= b.max_scale))
    throw Error(ErrorCode::InvalidArgument, "random affine scale range is not valid");
}

Transform synth_transform(const SynthConfig& cfg) {
  SplitMix64 rng(derive_seed(cfg.seed, 0));
  return draw_transform(rng, cfg);
}

SynthConfig scene_config(const SynthConfig& cfg, std::size_t index) {
  SynthConfig out = cfg;
  out.seed = derive_seed(cfg.seed, 1000 + index);
  return out;
}

Scene generate_scene(const SynthConfig& cfg) {
  validate(cfg);
  // Independent streams per concern, so e.g. turning on embedding noise does
  // not move the boxes.
  SplitMix64 place_rng(derive_seed(cfg.seed, 1));
  SplitMix64 score_rng(derive_seed(cfg.seed, 2));
  SplitMix64 grid_rng(derive_seed(cfg.seed, 3));
  SplitMix64 point_rng(derive_seed(cfg.seed, 4));
  SplitMix64 order_rng(derive_seed(cfg.seed, 5));

  const ImageExtent extent = cfg.image_extent;
  const Transform truth = synth_transform(cfg);
  const Transform inverse = truth.inverse();
  const auto& gs = cfg.grid_shape;
  const FeatureGrid layout(gs.rows, gs.cols, 1, std::vector<float>(gs.rows * gs.cols, 0.0f), extent);

  Scene scene;
  scene.scene_id = "synth_" + std::to_string(cfg.seed);
  scene.left_extent = extent;
  scene.right_extent = extent;

  // Ground truth: right boxes are the exact hull of the transformed left box,
  // fully inside the frame; neither side shares a grid cell between boxes.
  std::vector<std::set<GridCell>> left_cells, right_cells;
  for (std::size_t k = 0; k < cfg.n_changes; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const BoundingBox left = random_box(place_rng, cfg);
      BoundingBox right;
      try {
        right = transform_box_hull(truth, left);
      } catch (const Error&) {
        continue;
      }
      if (!inside(right, extent) || !right.has_positive_area()) continue;
      auto lc = cells_of(left, layout);
      auto rc = cells_of(right, layout);
      if (shares_cell(lc, left_cells) || shares_cell(rc, right_cells)) continue;
      scene.gt_left.push_back(left);
      scene.gt_right.push_back(right);
      scene.gt_correspondence.push_back({k, k});
      left_cells.push_back(std::move(lc));
      right_cells.push_back(std::move(rc));
      placed = true;
    }
    if (!placed) infeasible(cfg, "could not place change " + std::to_string(k));
  }

  for (std::size_t k = 0; k < cfg.n_changes; ++k) {
    BoundingBox l = jitter(place_rng, scene.gt_left[k], cfg.box_jitter_sigma, extent);
    BoundingBox r = jitter(place_rng, scene.gt_right[k], cfg.box_jitter_sigma, extent);
    l.score = score_rng.uniform(cfg.score_range_tp.lo, cfg.score_range_tp.hi);
    r.score = score_rng.uniform(cfg.score_range_tp.lo, cfg.score_range_tp.hi);
    scene.left_detections.push_back(l);
    scene.right_detections.push_back(r);
  }

  // Distractors: no overlap on their own side, and no overlap across sides in
  // either direction of projection, including with earlier distractors.
  std::vector<BoundingBox> left_distractors, right_distractors;
  const auto isolated = [&](const BoundingBox& box, bool on_left) {
    const auto& own = on_left ? scene.left_detections : scene.right_detections;
    const auto& other = on_left ? scene.right_detections : scene.left_detections;
    const auto& other_distractors = on_left ? right_distractors : left_distractors;
    const Transform& forward = on_left ? truth : inverse;
    const Transform& backward = on_left ? inverse : truth;
    if (overlaps_any(box, own)) return false;
    if (const auto p = try_project(forward, box, extent); p && overlaps_any(*p, other)) return false;
    for (const auto& d : other_distractors)
      if (const auto p = try_project(backward, d, extent); p && intersection_area(*p, box) > 0.0)
        return false;
    return true;
  };
  for (std::size_t i = 0; i < 2 * cfg.n_distractors_per_side; ++i) {
    const bool on_left = i % 2 == 0;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      BoundingBox box = random_box(place_rng, cfg);
      if (!isolated(box, on_left)) continue;
      box.score = score_rng.uniform(cfg.score_range_fp.lo, cfg.score_range_fp.hi);
      (on_left ? scene.left_detections : scene.right_detections).push_back(box);
      (on_left ? left_distractors : right_distractors).push_back(box);
      placed = true;
    }
    if (!placed) infeasible(cfg, "could not place distractor " + std::to_string(i / 2));
  }
  order_rng.shuffle(scene.left_detections);
  order_rng.shuffle(scene.right_detections);

  // Embedding directions: exact basis vectors when the dimension allows,
  // random unit vectors (nearly orthogonal in high dimension) otherwise.
  std::vector<std::vector<double>> directions;
  for (std::size_t k = 0; k <= cfg.n_changes; ++k) {
    if (gs.dim > cfg.n_changes) {
      std::vector<double> e(gs.dim, 0.0);
      e[k] = 1.0;
      directions.push_back(std::move(e));
    } else {
      directions.push_back(unit_direction(grid_rng, gs.dim));
    }
  }
  scene.left_grid = build_grid(grid_rng, cfg, directions, left_cells);
  scene.right_grid = build_grid(grid_rng, cfg, directions, right_cells);

  const auto n_outliers = static_cast<std::size_t>(
      std::llround(cfg.point_outlier_fraction * static_cast<double>(cfg.n_point_matches)));
  for (std::size_t i = 0; i < cfg.n_point_matches; ++i) {
    PointMatch m;
    if (i < n_outliers) {
      m.left = {point_rng.uniform(0.0, extent.width), point_rng.uniform(0.0, extent.height)};
      m.right = {point_rng.uniform(0.0, extent.width), point_rng.uniform(0.0, extent.height)};
    } else {
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
        m.left = {point_rng.uniform(0.0, extent.width), point_rng.uniform(0.0, extent.height)};
        const Point2 mapped = truth.apply(m.left);
        if (mapped.x < 0.0 || mapped.y < 0.0 || mapped.x > extent.width || mapped.y > extent.height)
          continue;
        m.right = {mapped.x + point_rng.normal(0.0, cfg.point_noise_sigma),
                   mapped.y + point_rng.normal(0.0, cfg.point_noise_sigma)};
        placed = true;
      }
      if (!placed) infeasible(cfg, "transform maps the frame outside itself");
    }
    scene.point_matches.push_back(m);
  }
  order_rng.shuffle(scene.point_matches);

  if (cfg.emit_transform) scene.transform = corrupt(score_rng, truth, cfg.transform_corruption, extent);
  return scene;
}

F1Report idealized_upper_bound(const SynthConfig& cfg, const PipelineConfig& pipeline) {
  Scene scene = generate_scene(cfg);
  // Ground truth stands in for the detector; every box passes the threshold.
  scene.left_detections = scene.gt_left;
  scene.right_detections = scene.gt_right;
  for (auto& b : scene.left_detections) b.score = 1.0;
  for (auto& b : scene.right_detections) b.score = 1.0;

  PipelineConfig run = pipeline;
  run.detection_threshold = 0.0;
  run.alignment_enabled = true;
  run.hungarian_enabled = true;
  const PipelineResult result = run_pipeline(scene, run);
  return correspondence_f1(result.pairs, scene.gt_left, scene.gt_right, scene.gt_correspondence);
}

F1Report idealized_upper_bound(const SynthConfig& cfg, std::size_t n_scenes,
                               const PipelineConfig& pipeline) {
  F1Report total;
  for (std::size_t i = 0; i < n_scenes; ++i) total += idealized_upper_bound(scene_config(cfg, i), pipeline);
  return total;
}

}  // namespace chgcorr
