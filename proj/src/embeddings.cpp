// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chgcorr/error.hpp"

namespace chgcorr {

FeatureGrid::FeatureGrid(std::size_t rows, std::size_t cols, std::size_t dim,
                         std::vector<float> data, ImageExtent extent)
    : rows_(rows), cols_(cols), dim_(dim), data_(std::move(data)), extent_(extent) {
  if (rows_ == 0 || cols_ == 0 || dim_ == 0)
    throw Error(ErrorCode::InvalidArgument, "feature grid sizes must be >= 1");
  if (data_.size() != rows_ * cols_ * dim_)
    throw Error(ErrorCode::InvalidArgument,
                "feature grid holds " + std::to_string(data_.size()) + " values, expected " +
                    std::to_string(rows_ * cols_ * dim_));
  if (!(extent_.width > 0.0) || !(extent_.height > 0.0) || !std::isfinite(extent_.width) ||
      !std::isfinite(extent_.height))
    throw Error(ErrorCode::InvalidArgument, "feature grid extent must be positive");
  for (float v : data_)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite grid value");
}

BoundingBox FeatureGrid::cell_box(std::size_t row, std::size_t col) const {
  const auto edge = [](std::size_t i, std::size_t n, double length) {
    return static_cast<double>(i) * length / static_cast<double>(n);
  };
  return {edge(col, cols_, extent_.width), edge(row, rows_, extent_.height),
          edge(col + 1, cols_, extent_.width), edge(row + 1, rows_, extent_.height), {}};
}

std::vector<GridCell> patch_indices(const BoundingBox& box, const FeatureGrid& grid) {
  std::vector<GridCell> cells;
  for (std::size_t r = 0; r < grid.rows(); ++r)
    for (std::size_t c = 0; c < grid.cols(); ++c)
      if (intersection_area(box, grid.cell_box(r, c)) > 0.0) cells.push_back({r, c});
  if (cells.empty()) throw Error(ErrorCode::NoOverlap, "box does not overlap the image extent");
  return cells;
}

Embedding mean_pool_embedding(const BoundingBox& box, const FeatureGrid& grid) {
  const auto cells = patch_indices(box, grid);
  Embedding out(grid.dim(), 0.0);
  for (const auto& cell : cells) {
    const auto patch = grid.patch(cell.row, cell.col);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += static_cast<double>(patch[k]);
  }
  const auto n = static_cast<double>(cells.size());
  for (auto& v : out) v /= n;
  return out;
}

double cosine_cost(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, std::to_string(a.size()) + " vs " +
                                                  std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorCode::ZeroNormEmbedding, "zero-norm embedding");
  const double cosine = dot / std::sqrt(na * nb);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

CostMatrix cost_matrix(std::span<const Embedding> left, std::span<const Embedding> right) {
  const auto check = [](std::span<const Embedding> side, const char* name, std::size_t dim) {
    for (std::size_t i = 0; i < side.size(); ++i) {
      if (side[i].size() != dim)
        throw Error(ErrorCode::DimensionMismatch, std::string(name) + "[" + std::to_string(i) +
                                                      "] has dimension " +
                                                      std::to_string(side[i].size()) +
                                                      ", expected " + std::to_string(dim));
      double norm = 0.0;
      for (double v : side[i]) norm += v * v;
      if (!(norm > 0.0))
        throw Error(ErrorCode::ZeroNormEmbedding,
                    std::string(name) + "[" + std::to_string(i) + "] has zero norm");
    }
  };
  const std::size_t dim = !left.empty() ? left[0].size() : (!right.empty() ? right[0].size() : 0);
  check(left, "left", dim);
  check(right, "right", dim);

  CostMatrix out(left.size(), right.size());
  for (std::size_t i = 0; i < left.size(); ++i)
    for (std::size_t j = 0; j < right.size(); ++j) out(i, j) = cosine_cost(left[i], right[j]);
  return out;
}

}  // namespace chgcorr
