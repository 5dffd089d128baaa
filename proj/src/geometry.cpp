// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "chgcorr/error.hpp"
#include "chgcorr/rng.hpp"

namespace chgcorr {

namespace {

bool finite(double v) { return std::isfinite(v); }

// Relative tolerance on sin(angle) below which three points count as collinear.
constexpr double kCollinearSine = 1e-6;

bool collinear(Point2 a, Point2 b, Point2 c) {
  const double abx = b.x - a.x, aby = b.y - a.y;
  const double acx = c.x - a.x, acy = c.y - a.y;
  const double cross = abx * acy - aby * acx;
  const double lengths = std::hypot(abx, aby) * std::hypot(acx, acy);
  return std::abs(cross) <= kCollinearSine * lengths;
}

bool any_three_collinear(std::span<const Point2> pts) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        if (collinear(pts[i], pts[j], pts[k])) return true;
  return false;
}

bool degenerate_sample(std::span<const PointMatch> matches, std::span<const std::size_t> idx) {
  std::vector<Point2> left, right;
  for (auto i : idx) {
    left.push_back(matches[i].left);
    right.push_back(matches[i].right);
  }
  return any_three_collinear(left) || any_three_collinear(right);
}

// Similarity that moves the centroid to the origin and the mean distance to
// sqrt(2); conditions both the normal equations and the DLT.
struct Normalizer {
  double cx = 0.0, cy = 0.0, scale = 1.0;

  static Normalizer fit(std::span<const Point2> pts) {
    Normalizer n;
    for (const auto& p : pts) {
      n.cx += p.x;
      n.cy += p.y;
    }
    n.cx /= static_cast<double>(pts.size());
    n.cy /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - n.cx, p.y - n.cy);
    mean_dist /= static_cast<double>(pts.size());
    n.scale = mean_dist > 0.0 ? std::numbers::sqrt2 / mean_dist : 1.0;
    return n;
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d t;
    t << scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1;
    return t;
  }
};

Transform fit_affine(std::span<const PointMatch> matches) {
  std::vector<Point2> left;
  left.reserve(matches.size());
  for (const auto& m : matches) left.push_back(m.left);
  const Normalizer norm = Normalizer::fit(left);

  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atx = Eigen::Vector3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  for (const auto& m : matches) {
    const Eigen::Vector3d row(norm.scale * (m.left.x - norm.cx), norm.scale * (m.left.y - norm.cy), 1.0);
    ata += row * row.transpose();
    atx += row * m.right.x;
    aty += row * m.right.y;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  lu.setThreshold(1e-10);
  if (lu.rank() < 3) throw Error(ErrorCode::DegenerateGeometry, "collinear points in affine fit");
  const Eigen::Vector3d px = lu.solve(atx);
  const Eigen::Vector3d py = lu.solve(aty);

  // Undo the left-side normalisation: p_hat = S (p - c).
  const double s = norm.scale;
  return Transform::affine({px[0] * s, px[1] * s, px[2] - px[0] * s * norm.cx - px[1] * s * norm.cy,
                            py[0] * s, py[1] * s, py[2] - py[0] * s * norm.cx - py[1] * s * norm.cy});
}

Transform fit_homography(std::span<const PointMatch> matches) {
  std::vector<Point2> left, right;
  for (const auto& m : matches) {
    left.push_back(m.left);
    right.push_back(m.right);
  }
  const Normalizer nl = Normalizer::fit(left);
  const Normalizer nr = Normalizer::fit(right);

  const auto rows = static_cast<Eigen::Index>(2 * matches.size());
  Eigen::MatrixXd a(std::max<Eigen::Index>(rows, 9), 9);
  a.setZero();
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const double x = nl.scale * (left[i].x - nl.cx), y = nl.scale * (left[i].y - nl.cy);
    const double u = nr.scale * (right[i].x - nr.cx), v = nr.scale * (right[i].y - nr.cy);
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  // The null space must be one-dimensional.
  if (sv.size() >= 8 && sv[7] <= 1e-12 * sv[0])
    throw Error(ErrorCode::DegenerateGeometry, "homography DLT is rank deficient");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  const Eigen::Matrix3d full = nr.matrix().inverse() * hn * nl.matrix();
  if (std::abs(full(2, 2)) <= 1e-12 * full.cwiseAbs().maxCoeff())
    throw Error(ErrorCode::DegenerateGeometry, "homography maps the origin to infinity");
  std::array<double, 9> m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[static_cast<std::size_t>(r * 3 + c)] = full(r, c);
  return Transform::homography(m);
}

// Squared reprojection distance; +inf when the point maps to infinity.
double squared_residual(const Transform& t, const PointMatch& m) {
  const double w = t.homogeneous_w(m.left);
  if (!(std::abs(w) > 1e-12)) return std::numeric_limits<double>::infinity();
  const auto& h = t.matrix();
  const double x = (h[0] * m.left.x + h[1] * m.left.y + h[2]) / w;
  const double y = (h[3] * m.left.x + h[4] * m.left.y + h[5]) / w;
  const double dx = x - m.right.x, dy = y - m.right.y;
  return dx * dx + dy * dy;
}

std::size_t score_model(const Transform& t, std::span<const PointMatch> matches, double threshold,
                        std::vector<bool>& mask, double& residual_sum) {
  const double limit = threshold * threshold;
  std::size_t count = 0;
  residual_sum = 0.0;
  mask.assign(matches.size(), false);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const double r2 = squared_residual(t, matches[i]);
    if (r2 <= limit) {
      mask[i] = true;
      ++count;
      residual_sum += r2;
    }
  }
  return count;
}

std::vector<PointMatch> select(std::span<const PointMatch> matches, const std::vector<bool>& mask) {
  std::vector<PointMatch> out;
  for (std::size_t i = 0; i < matches.size(); ++i)
    if (mask[i]) out.push_back(matches[i]);
  return out;
}

}  // namespace

void validate(const BoundingBox& box) {
  if (!finite(box.x1) || !finite(box.y1) || !finite(box.x2) || !finite(box.y2))
    throw Error(ErrorCode::InvalidArgument, "box coordinates must be finite");
  if (box.x1 > box.x2 || box.y1 > box.y2)
    throw Error(ErrorCode::InvalidArgument, "box corners out of order");
  if (box.score && !(*box.score >= 0.0 && *box.score <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "box score outside [0, 1]");
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.has_positive_area() || !b.has_positive_area()) return 0.0;
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

void validate(const PointMatch& match) {
  if (!finite(match.left.x) || !finite(match.left.y) || !finite(match.right.x) ||
      !finite(match.right.y))
    throw Error(ErrorCode::InvalidArgument, "point match coordinates must be finite");
  if (match.weight && !(*match.weight >= 0.0 && *match.weight <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "point match weight outside [0, 1]");
}

Transform Transform::identity(TransformKind kind) {
  return Transform(kind, {1, 0, 0, 0, 1, 0, 0, 0, 1});
}

Transform Transform::translation(double dx, double dy) { return affine({1, 0, dx, 0, 1, dy}); }

Transform Transform::affine(const std::array<double, 6>& m) {
  for (double v : m)
    if (!finite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite affine coefficient");
  return Transform(TransformKind::Affine, {m[0], m[1], m[2], m[3], m[4], m[5], 0, 0, 1});
}

Transform Transform::homography(const std::array<double, 9>& m) {
  double largest = 0.0;
  for (double v : m) {
    if (!finite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite homography coefficient");
    largest = std::max(largest, std::abs(v));
  }
  if (!(std::abs(m[8]) > 1e-12 * largest))
    throw Error(ErrorCode::InvalidArgument, "homography (2,2) entry is zero");
  std::array<double, 9> out{};
  for (std::size_t i = 0; i < 9; ++i) out[i] = m[i] / m[8];
  out[8] = 1.0;
  return Transform(TransformKind::Homography, out);
}

Transform Transform::from_coefficients(TransformKind kind, std::span<const double> values) {
  if (kind == TransformKind::Affine) {
    if (values.size() != 6)
      throw Error(ErrorCode::InvalidArgument, "affine transform needs 6 values, got " +
                                                  std::to_string(values.size()));
    std::array<double, 6> m{};
    std::copy(values.begin(), values.end(), m.begin());
    return affine(m);
  }
  if (values.size() != 9)
    throw Error(ErrorCode::InvalidArgument,
                "homography needs 9 values, got " + std::to_string(values.size()));
  std::array<double, 9> m{};
  std::copy(values.begin(), values.end(), m.begin());
  return homography(m);
}

std::vector<double> Transform::coefficients() const {
  if (kind_ == TransformKind::Affine) return {m_.begin(), m_.begin() + 6};
  return {m_.begin(), m_.end()};
}

double Transform::homogeneous_w(Point2 p) const { return m_[6] * p.x + m_[7] * p.y + m_[8]; }

Point2 Transform::apply(Point2 p) const {
  const double w = homogeneous_w(p);
  const double scale = std::abs(m_[6] * p.x) + std::abs(m_[7] * p.y) + std::abs(m_[8]);
  if (!(std::abs(w) > 1e-12 * scale))
    throw Error(ErrorCode::SingularProjection, "point maps to the line at infinity");
  return {(m_[0] * p.x + m_[1] * p.y + m_[2]) / w, (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
}

Transform Transform::inverse() const {
  if (kind_ == TransformKind::Affine) {
    const double a = m_[0], b = m_[1], c = m_[3], d = m_[4];
    const double det = a * d - b * c;
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (!(std::abs(det) > 1e-12 * scale * scale))
      throw Error(ErrorCode::NonInvertibleTransform, "affine linear part is singular");
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    return affine({ia, ib, -(ia * m_[2] + ib * m_[5]), ic, id, -(ic * m_[2] + id * m_[5])});
  }
  Eigen::Matrix3d h;
  h << m_[0], m_[1], m_[2], m_[3], m_[4], m_[5], m_[6], m_[7], m_[8];
  const double det = h.determinant();
  const double scale = h.cwiseAbs().maxCoeff();
  if (!(std::abs(det) > 1e-12 * scale * scale * scale))
    throw Error(ErrorCode::NonInvertibleTransform, "homography is singular");
  const Eigen::Matrix3d inv = h.inverse();
  if (!(std::abs(inv(2, 2)) > 1e-12 * inv.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::NonInvertibleTransform, "inverse homography has zero (2,2) entry");
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = inv(r, c);
  return homography(out);
}

Transform Transform::compose(const Transform& other) const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += (*this)(r, k) * other(k, c);
      out[static_cast<std::size_t>(r * 3 + c)] = acc;
    }
  if (kind_ == TransformKind::Affine && other.kind_ == TransformKind::Affine)
    return affine({out[0], out[1], out[2], out[3], out[4], out[5]});
  return homography(out);
}

std::size_t minimal_sample_size(TransformKind kind) {
  return kind == TransformKind::Affine ? 3 : 4;
}

void validate(const RansacConfig& cfg, TransformKind kind) {
  if (!(cfg.inlier_threshold > 0.0) || !finite(cfg.inlier_threshold))
    throw Error(ErrorCode::InvalidArgument, "inlier_threshold must be positive");
  if (cfg.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (cfg.min_inliers < static_cast<int>(minimal_sample_size(kind)))
    throw Error(ErrorCode::InvalidArgument, "min_inliers below the minimal sample size");
}

Transform fit_least_squares(std::span<const PointMatch> matches, TransformKind kind) {
  if (matches.size() < minimal_sample_size(kind))
    throw Error(ErrorCode::InsufficientMatches, std::to_string(matches.size()) + " matches");
  return kind == TransformKind::Affine ? fit_affine(matches) : fit_homography(matches);
}

TransformEstimate estimate_transform(std::span<const PointMatch> matches, TransformKind kind,
                                     const RansacConfig& cfg) {
  const std::size_t k = minimal_sample_size(kind);
  if (matches.size() < k)
    throw Error(ErrorCode::InsufficientMatches, "need " + std::to_string(k) + " matches, got " +
                                                    std::to_string(matches.size()));
  validate(cfg, kind);
  for (const auto& m : matches) validate(m);

  SplitMix64 rng(cfg.seed);
  std::optional<Transform> best;
  std::vector<bool> best_mask, mask;
  std::size_t best_count = 0;
  double best_residual = std::numeric_limits<double>::infinity();

  // Degenerate draws are resampled; the cap bounds the total number of draws.
  const long max_draws = 10L * cfg.max_iterations;
  int iterations = 0;
  for (long draws = 0; iterations < cfg.max_iterations && draws < max_draws; ++draws) {
    const auto idx = rng.sample_distinct(matches.size(), k);
    if (degenerate_sample(matches, idx)) continue;
    std::vector<PointMatch> sample;
    for (auto i : idx) sample.push_back(matches[i]);
    std::optional<Transform> model;
    try {
      model = fit_least_squares(sample, kind);
    } catch (const Error&) {
      continue;
    }
    ++iterations;
    double residual = 0.0;
    const std::size_t count = score_model(*model, matches, cfg.inlier_threshold, mask, residual);
    if (count > best_count || (count == best_count && count > 0 && residual < best_residual)) {
      best = model;
      best_count = count;
      best_residual = residual;
      best_mask = mask;
    }
  }
  if (iterations == 0)
    throw Error(ErrorCode::DegenerateGeometry, "every sampled configuration was degenerate");
  if (best_count < static_cast<std::size_t>(cfg.min_inliers))
    throw Error(ErrorCode::NoConsensus, "best consensus " + std::to_string(best_count) +
                                            " < min_inliers " + std::to_string(cfg.min_inliers));

  // Refit on the consensus set; re-gather inliers under the refit model while
  // the set keeps growing (bounded).
  Transform model = fit_least_squares(select(matches, best_mask), kind);
  std::vector<bool> current = best_mask;
  std::size_t current_count = best_count;
  for (int round = 0; round < 10; ++round) {
    double residual = 0.0;
    const std::size_t count = score_model(model, matches, cfg.inlier_threshold, mask, residual);
    if (mask == current || count < current_count) break;
    try {
      model = fit_least_squares(select(matches, mask), kind);
    } catch (const Error&) {
      break;
    }
    current = mask;
    current_count = count;
  }
  return {model, current, current_count, iterations};
}

BoundingBox transform_box_hull(const Transform& t, const BoundingBox& box) {
  const std::array<Point2, 4> corners{Point2{box.x1, box.y1}, Point2{box.x2, box.y1},
                                      Point2{box.x1, box.y2}, Point2{box.x2, box.y2}};
  // A hull is only meaningful when every corner lies on the same side of the
  // line at infinity.
  double sign = 0.0;
  for (const auto& c : corners) {
    const double w = t.homogeneous_w(c);
    if (sign == 0.0) sign = w;
    if (w * sign <= 0.0)
      throw Error(ErrorCode::SingularProjection, "box straddles the line at infinity");
  }
  BoundingBox out;
  out.x1 = out.y1 = std::numeric_limits<double>::infinity();
  out.x2 = out.y2 = -std::numeric_limits<double>::infinity();
  for (const auto& c : corners) {
    const Point2 p = t.apply(c);
    out.x1 = std::min(out.x1, p.x);
    out.y1 = std::min(out.y1, p.y);
    out.x2 = std::max(out.x2, p.x);
    out.y2 = std::max(out.y2, p.y);
  }
  out.score = box.score;
  return out;
}

std::optional<BoundingBox> project_box(const Transform& t, const BoundingBox& box,
                                       ImageExtent extent) {
  BoundingBox hull = transform_box_hull(t, box);
  hull.x1 = std::clamp(hull.x1, 0.0, extent.width);
  hull.x2 = std::clamp(hull.x2, 0.0, extent.width);
  hull.y1 = std::clamp(hull.y1, 0.0, extent.height);
  hull.y2 = std::clamp(hull.y2, 0.0, extent.height);
  if (!hull.has_positive_area()) return std::nullopt;
  return hull;
}

}  // namespace chgcorr
