// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chgcorr {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct ImageExtent {
  double width = 0.0;
  double height = 0.0;

  friend bool operator==(const ImageExtent&, const ImageExtent&) = default;
};

// Axis-aligned box in pixel coordinates, (x1, y1) top-left, (x2, y2)
// bottom-right. Detections carry a confidence score; ground truth does not.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  std::optional<double> score;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool has_positive_area() const { return x2 > x1 && y2 > y1; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Throws InvalidArgument unless coordinates are finite and ordered and the
// score, when present, lies in [0, 1].
void validate(const BoundingBox& box);

// Intersection over union; 0 when either box has zero area.
double iou(const BoundingBox& a, const BoundingBox& b);

// Area of the intersection (0 when disjoint or merely touching).
double intersection_area(const BoundingBox& a, const BoundingBox& b);

struct PointMatch {
  Point2 left;
  Point2 right;
  std::optional<double> weight;

  friend bool operator==(const PointMatch&, const PointMatch&) = default;
};

void validate(const PointMatch& match);

enum class TransformKind { Affine, Homography };

// Left-image to right-image mapping. Stored as a row-major 3x3 matrix in
// either case; an affine transform keeps the last row fixed at (0, 0, 1) and a
// homography is normalised so that entry (2, 2) equals 1.
class Transform {
 public:
  static Transform identity(TransformKind kind = TransformKind::Affine);
  static Transform translation(double dx, double dy);
  // Row-major 2x3: [a b tx; c d ty].
  static Transform affine(const std::array<double, 6>& m);
  // Row-major 3x3; rescaled so that (2, 2) == 1. Throws InvalidArgument if
  // that entry is (numerically) zero or any value is non-finite.
  static Transform homography(const std::array<double, 9>& m);
  // 6 values for Affine, 9 for Homography.
  static Transform from_coefficients(TransformKind kind, std::span<const double> values);

  TransformKind kind() const { return kind_; }
  const std::array<double, 9>& matrix() const { return m_; }
  double operator()(int row, int col) const { return m_[static_cast<std::size_t>(row * 3 + col)]; }

  // The serialised form: 6 values (affine) or 9 (homography).
  std::vector<double> coefficients() const;

  // Maps a point; throws SingularProjection when the homogeneous coordinate
  // vanishes.
  Point2 apply(Point2 p) const;
  // Homogeneous w of the mapped point (1 for affine).
  double homogeneous_w(Point2 p) const;

  // Throws NonInvertibleTransform when the matrix is singular.
  Transform inverse() const;

  // this ∘ other: apply `other` first.
  Transform compose(const Transform& other) const;

  friend bool operator==(const Transform&, const Transform&) = default;

 private:
  Transform(TransformKind kind, const std::array<double, 9>& m) : kind_(kind), m_(m) {}

  TransformKind kind_ = TransformKind::Affine;
  std::array<double, 9> m_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

std::size_t minimal_sample_size(TransformKind kind);

struct RansacConfig {
  double inlier_threshold = 3.0;  // px, reprojection distance
  int max_iterations = 1000;
  int min_inliers = 6;
  std::uint64_t seed = 0;

  friend bool operator==(const RansacConfig&, const RansacConfig&) = default;
};

void validate(const RansacConfig& cfg, TransformKind kind);

struct TransformEstimate {
  Transform transform;
  std::vector<bool> inlier_mask;
  std::size_t inlier_count = 0;
  int iterations = 0;
};

// RANSAC over minimal samples followed by a least-squares refit on the
// consensus set. Deterministic for a fixed seed.
TransformEstimate estimate_transform(std::span<const PointMatch> matches, TransformKind kind,
                                     const RansacConfig& cfg = {});

// Least-squares fit over all given matches with no outlier rejection: normal
// equations for affine, normalised DLT for homography.
Transform fit_least_squares(std::span<const PointMatch> matches, TransformKind kind);

// Axis-aligned hull of the four mapped corners, clipped to `extent`; nullopt
// when nothing of positive area remains. The score is carried over.
std::optional<BoundingBox> project_box(const Transform& t, const BoundingBox& box,
                                       ImageExtent extent);

// Unclipped hull of the mapped corners.
BoundingBox transform_box_hull(const Transform& t, const BoundingBox& box);

}  // namespace chgcorr
