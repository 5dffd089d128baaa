#include <doctest.h>

#include <set>

#include "chgcorr/error.hpp"
#include "chgcorr/pipeline.hpp"
#include "chgcorr/synth.hpp"
#include "support.hpp"

using namespace chgcorr;

namespace {

BoundingBox box(double x1, double y1, double x2, double y2, std::optional<double> s = std::nullopt) {
  return {x1, y1, x2, y2, s};
}

// 8x8 grid over 256x256 with direction `dir(r, c)` in 4 dims.
template <typename Fn>
FeatureGrid grid_of(Fn dir) {
  std::vector<float> data;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      std::vector<float> v(4, 0.0f);
      v[dir(r, c)] = 1.0f;
      data.insert(data.end(), v.begin(), v.end());
    }
  return FeatureGrid(8, 8, 4, std::move(data), {256, 256});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("threshold_detections examples") {
  const std::vector<BoundingBox> d{box(0, 0, 1, 1, 0.3), box(0, 0, 1, 1, 0.2), box(0, 0, 1, 1, 0.9)};
  CHECK(threshold_indices(d, 0.25) == std::vector<std::size_t>{0, 2});
  CHECK(threshold_detections(d, 0.0).size() == 3);
  CHECK(threshold_detections({}, 0.5).empty());
  CHECK(threshold_indices(d, 0.3) == std::vector<std::size_t>{0, 2});  // inclusive
  const std::vector<BoundingBox> unscored{box(0, 0, 1, 1)};
  CHECK(code_of([&] { threshold_detections(unscored, 0.1); }) == ErrorCode::MissingScore);
}

TEST_CASE("align_filter examples") {
  const ImageExtent ext{256, 256};
  const auto b = box(10, 10, 20, 20);
  std::vector<BoundingBox> l{b}, r{b};
  auto out = align_filter(l, r, Transform::identity(), ext, ext);
  CHECK(out.left.size() == 1);
  CHECK(out.right.size() == 1);

  l = {box(0, 0, 10, 10)};
  r = {box(100, 100, 110, 110)};
  out = align_filter(l, r, Transform::identity(), ext, ext);
  CHECK(out.left.empty());
  CHECK(out.right.empty());

  l = {box(0, 0, 10, 10)};
  r = {box(5, 0, 15, 10)};
  out = align_filter(l, r, Transform::translation(5, 0), ext, ext);
  CHECK(out.left_index == std::vector<std::size_t>{0});
  CHECK(out.right_index == std::vector<std::size_t>{0});

  CHECK(code_of([&] { align_filter(l, r, Transform::affine({1, 1, 0, 1, 1, 0}), ext, ext); }) ==
        ErrorCode::NonInvertibleTransform);
}

TEST_CASE("align_filter keeps identical lists under identity") {
  SplitMix64 rng(6);
  for (int i = 0; i < 100; ++i) {
    std::vector<BoundingBox> boxes;
    for (std::size_t k = 0, n = rng.below(8); k < n; ++k) boxes.push_back(testing::random_box(rng, 256, 2, 60));
    const auto out = align_filter(boxes, boxes, Transform::identity(), {256, 256}, {256, 256});
    REQUIRE(out.left == boxes);
    REQUIRE(out.right == boxes);
  }
}

TEST_CASE("align_filter uses the inverse on the right") {
  // Left box maps onto the right box; a right-only box far away must go.
  const std::vector<BoundingBox> l{box(0, 0, 10, 10)};
  const std::vector<BoundingBox> r{box(50, 0, 60, 10), box(200, 200, 210, 210)};
  const auto out = align_filter(l, r, Transform::translation(50, 0), {256, 256}, {256, 256});
  CHECK(out.left_index == std::vector<std::size_t>{0});
  CHECK(out.right_index == std::vector<std::size_t>{0});
}

TEST_CASE("predict_correspondences examples") {
  const auto left_grid = grid_of([](std::size_t r, std::size_t c) { return r < 4 && c < 4 ? 0 : 1; });
  const auto right_grid = grid_of([](std::size_t r, std::size_t c) { return r < 4 && c < 4 ? 1 : 0; });
  const auto a = box(0, 0, 64, 64), b = box(192, 192, 256, 256);

  std::vector<BoundingBox> l{a}, r{b};
  auto pairs = predict_correspondences(l, r, left_grid, right_grid);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].cost == 0.0);

  // u at a / v at b on the left, swapped on the right.
  l = {a, b};
  r = {a, b};
  pairs = predict_correspondences(l, r, left_grid, right_grid);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].left_index == 0);
  CHECK(pairs[0].right_index == 1);
  CHECK(pairs[1].left_index == 1);
  CHECK(pairs[1].right_index == 0);
  CHECK(pairs[0].cost == 0.0);
  CHECK(pairs[1].cost == 0.0);

  r = {b};
  pairs = predict_correspondences(l, r, left_grid, right_grid);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].left_index == 0);

  CHECK(predict_correspondences({}, r, left_grid, right_grid).empty());
}

TEST_CASE("run_pipeline on an empty no-change scene") {
  Scene s;
  s.transform = Transform::identity();
  const auto res = run_pipeline(s, {});
  CHECK(res.pairs.empty());
  CHECK(res.stage1_left.empty());
  CHECK(res.stage2_right.empty());
  CHECK(res.diagnostics.final_boxes == StageCounts{0, 0});
}

TEST_CASE("run_pipeline recovers ground truth on a clean synthetic scene") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.transform_spec = TransformSpec::random_affine();
    const Scene s = generate_scene(cfg);
    const auto res = run_pipeline(s, {});
    std::set<IndexPair> got;
    for (const auto& p : res.pairs) {
      // Map detection indices back to gt via exact box equality.
      const auto li = std::find_if(s.gt_left.begin(), s.gt_left.end(), [&](const BoundingBox& g) {
        return g.x1 == p.left_box.x1 && g.y1 == p.left_box.y1 && g.x2 == p.left_box.x2 && g.y2 == p.left_box.y2;
      });
      const auto ri = std::find_if(s.gt_right.begin(), s.gt_right.end(), [&](const BoundingBox& g) {
        return g.x1 == p.right_box.x1 && g.y1 == p.right_box.y1 && g.x2 == p.right_box.x2 && g.y2 == p.right_box.y2;
      });
      REQUIRE(li != s.gt_left.end());
      REQUIRE(ri != s.gt_right.end());
      got.insert({static_cast<std::size_t>(li - s.gt_left.begin()), static_cast<std::size_t>(ri - s.gt_right.begin())});
    }
    REQUIRE(got == std::set<IndexPair>(s.gt_correspondence.begin(), s.gt_correspondence.end()));
  }
}

TEST_CASE("run_pipeline stage contracts across configurations") {
  SynthConfig cfg;
  cfg.n_distractors_per_side = 4;
  cfg.box_jitter_sigma = 1.0;
  cfg.embedding_noise_sigma = 0.1;
  cfg.transform_spec = TransformSpec::random_affine();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    cfg.seed = seed;
    const Scene s = generate_scene(cfg);
    for (int mode = 0; mode < 4; ++mode) {
      PipelineConfig pc;
      pc.alignment_enabled = (mode & 1) != 0;
      pc.hungarian_enabled = (mode & 2) != 0;
      const auto res = run_pipeline(s, pc);
      REQUIRE(res.stage1_left.size() <= s.left_detections.size());
      REQUIRE(res.stage2_left.size() <= res.stage1_left.size());
      REQUIRE(res.stage2_right.size() <= res.stage1_right.size());
      // stage2 is a subsequence of stage1, as recorded by the provenance.
      for (std::size_t i = 0; i < res.stage2_left.size(); ++i)
        REQUIRE(res.stage1_left[res.stage2_left_index[i]] == res.stage2_left[i]);
      for (std::size_t i = 0; i < res.stage2_right.size(); ++i)
        REQUIRE(res.stage1_right[res.stage2_right_index[i]] == res.stage2_right[i]);
      if (!pc.alignment_enabled) {
        REQUIRE(res.stage2_left == res.stage1_left);
        REQUIRE(res.stage2_right == res.stage1_right);
      }
      if (pc.hungarian_enabled) {
        REQUIRE(res.pairs.size() == std::min(res.stage2_left.size(), res.stage2_right.size()));
        REQUIRE(res.diagnostics.final_boxes == StageCounts{res.pairs.size(), res.pairs.size()});
      } else {
        REQUIRE(res.pairs.empty());
        REQUIRE(res.diagnostics.final_boxes == StageCounts{res.stage2_left.size(), res.stage2_right.size()});
      }
      for (const auto& p : res.pairs) {
        REQUIRE(p.left_index < res.stage2_left.size());
        REQUIRE(p.right_index < res.stage2_right.size());
        REQUIRE(res.stage2_left[p.left_index] == p.left_box);
        REQUIRE(res.stage2_right[p.right_index] == p.right_box);
        REQUIRE(p.cost >= 0.0);
        REQUIRE(p.cost <= 2.0);
      }
      REQUIRE(run_pipeline(s, pc) == res);
    }
  }
}

TEST_CASE("run_pipeline transform sources and fallbacks") {
  SynthConfig cfg;
  cfg.seed = 3;
  cfg.transform_spec = TransformSpec::random_affine();
  cfg.emit_transform = false;
  cfg.point_outlier_fraction = 0.2;
  cfg.point_noise_sigma = 0.3;
  Scene s = generate_scene(cfg);

  auto res = run_pipeline(s, {});
  CHECK(res.diagnostics.transform_source == TransformSource::Estimated);
  CHECK(res.diagnostics.ransac_inliers >= 30);
  CHECK(res.diagnostics.alignment_applied);

  // Pure noise: RANSAC finds no consensus and alignment is skipped.
  SplitMix64 rng(1);
  for (auto& m : s.point_matches) m.right = {rng.uniform(0, 256), rng.uniform(0, 256)};
  PipelineConfig strict;
  strict.ransac.min_inliers = 40;
  res = run_pipeline(s, strict);
  CHECK_FALSE(res.diagnostics.alignment_applied);
  CHECK(res.diagnostics.alignment_fallback.has_value());
  CHECK(res.stage2_left == res.stage1_left);

  s.point_matches.resize(2);
  CHECK(code_of([&] { run_pipeline(s, {}); }) == ErrorCode::TransformUnavailable);
  PipelineConfig no_align;
  no_align.alignment_enabled = false;
  CHECK_NOTHROW(run_pipeline(s, no_align));

  s.left_grid.reset();
  res = run_pipeline(s, no_align);
  CHECK(res.pairs.empty());
  CHECK_FALSE(res.diagnostics.hungarian_applied);
  CHECK(res.diagnostics.hungarian_skipped.has_value());
}

TEST_CASE("run_pipeline annotates stage errors") {
  Scene s;
  s.transform = Transform::identity();
  s.left_detections = {box(0, 0, 10, 10)};
  try {
    run_pipeline(s, {});
    FAIL("expected MissingScore");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingScore);
    CHECK(std::string(e.what()).find("threshold") != std::string::npos);
  }
}

TEST_CASE("scene validation") {
  Scene s;
  s.gt_left = {box(0, 0, 5, 5)};
  s.gt_right = {box(0, 0, 5, 5)};
  s.gt_correspondence = {{0, 1}};
  CHECK(code_of([&] { validate(s); }) == ErrorCode::IndexOutOfRange);
  s.gt_right.push_back(box(1, 1, 4, 4));
  s.gt_correspondence = {{0, 0}, {0, 1}};
  CHECK(code_of([&] { validate(s); }) == ErrorCode::InvalidArgument);
  PipelineConfig pc;
  pc.detection_threshold = 1.5;
  CHECK(code_of([&] { validate(pc); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("label_ground_truth_matches on a clean scene is all positive") {
  SynthConfig cfg;
  cfg.n_changes = 5;
  const Scene s = generate_scene(cfg);
  const auto labels = label_ground_truth_matches(s);
  REQUIRE(labels.size() == 5);
  for (const auto& l : labels) CHECK(l.label == PairLabelKind::Positive);
}
