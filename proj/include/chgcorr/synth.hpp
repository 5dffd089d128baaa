// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "chgcorr/geometry.hpp"
#include "chgcorr/metrics.hpp"
#include "chgcorr/pipeline.hpp"

namespace chgcorr {

// Ranges for a random similarity-plus-shear about the image centre.
struct RandomAffineBounds {
  double max_rotation_deg = 5.0;
  double min_scale = 0.95;
  double max_scale = 1.05;
  double max_shear = 0.02;
  double max_translation = 10.0;  // px

  friend bool operator==(const RandomAffineBounds&, const RandomAffineBounds&) = default;
};

struct TransformSpec {
  enum class Kind { Identity, Translation, Affine, RandomAffine };

  Kind kind = Kind::Identity;
  double dx = 0.0;
  double dy = 0.0;
  std::array<double, 6> affine{1, 0, 0, 0, 1, 0};
  RandomAffineBounds bounds;

  static TransformSpec identity() { return {}; }
  static TransformSpec translation(double dx, double dy) {
    TransformSpec s;
    s.kind = Kind::Translation;
    s.dx = dx;
    s.dy = dy;
    return s;
  }
  static TransformSpec fixed_affine(const std::array<double, 6>& m) {
    TransformSpec s;
    s.kind = Kind::Affine;
    s.affine = m;
    return s;
  }
  static TransformSpec random_affine(const RandomAffineBounds& b = {}) {
    TransformSpec s;
    s.kind = Kind::RandomAffine;
    s.bounds = b;
    return s;
  }

  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

struct GridShape {
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t dim = 64;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_changes = 3;
  std::size_t n_distractors_per_side = 0;
  TransformSpec transform_spec;
  double embedding_noise_sigma = 0.0;
  ValueRange score_range_tp{0.6, 1.0};
  ValueRange score_range_fp{0.05, 0.6};
  std::size_t n_point_matches = 50;
  double point_outlier_fraction = 0.0;
  double point_noise_sigma = 0.0;  // px, on inlier matches
  double box_jitter_sigma = 0.0;   // px, per coordinate
  ImageExtent image_extent{256.0, 256.0};
  GridShape grid_shape;
  ValueRange box_size{16.0, 32.0};  // side length, px
  // Record the transform in the scene; otherwise the pipeline has to
  // estimate it from the point matches.
  bool emit_transform = true;
  // Perturbation of the recorded transform: linear entries move by up to
  // this amount, translations by up to this fraction of the larger image
  // side. Ground truth always follows the true transform.
  double transform_corruption = 0.0;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

inline constexpr int kPlacementAttempts = 10000;

void validate(const SynthConfig& cfg);

// The true left-to-right transform the generator uses for `cfg`.
Transform synth_transform(const SynthConfig& cfg);

// Seed of the i-th scene of a batch started from `cfg.seed`.
SynthConfig scene_config(const SynthConfig& cfg, std::size_t index);

// Pure function of `cfg`. Ground-truth boxes do not share grid cells within a
// side, so each box pools exactly its pair's embedding direction; distractors
// are placed so their projection overlaps nothing on the other side. Throws
// PlacementInfeasible when the retry budget runs out.
Scene generate_scene(const SynthConfig& cfg);

// Alignment + matching run directly on the ground-truth boxes of one
// generated scene, scored against its correspondence.
F1Report idealized_upper_bound(const SynthConfig& cfg, const PipelineConfig& pipeline = {});

// Summed over `n_scenes` scenes seeded via scene_config().
F1Report idealized_upper_bound(const SynthConfig& cfg, std::size_t n_scenes,
                               const PipelineConfig& pipeline = {});

}  // namespace chgcorr
