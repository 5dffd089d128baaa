// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chgcorr/cost_matrix.hpp"
#include "chgcorr/geometry.hpp"

namespace chgcorr {

// rows x cols patch embeddings of `dim` channels each, tiling `extent`
// uniformly. Storage is row-major (row, col, channel), matching the on-disk
// sidecar layout.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  // Throws InvalidArgument on zero sizes, a data length mismatch, non-finite
  // values or a non-positive extent.
  FeatureGrid(std::size_t rows, std::size_t cols, std::size_t dim, std::vector<float> data,
              ImageExtent extent);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t dim() const { return dim_; }
  ImageExtent extent() const { return extent_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> patch(std::size_t row, std::size_t col) const {
    return {data_.data() + (row * cols_ + col) * dim_, dim_};
  }

  // Pixel footprint of one cell; boundaries are real-valued, so extents that
  // do not divide evenly are fine.
  BoundingBox cell_box(std::size_t row, std::size_t col) const;

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  ImageExtent extent_;
};

struct GridCell {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

using Embedding = std::vector<double>;

// Cells whose footprint meets the box with positive area, in row-major order.
// Edge contact alone does not select a cell. Throws NoOverlap when empty.
std::vector<GridCell> patch_indices(const BoundingBox& box, const FeatureGrid& grid);

// Component-wise mean of the selected patch vectors.
Embedding mean_pool_embedding(const BoundingBox& box, const FeatureGrid& grid);

// 1 - cos(a, b), in [0, 2]. Zero-norm inputs are rejected.
double cosine_cost(std::span<const double> a, std::span<const double> b);

CostMatrix cost_matrix(std::span<const Embedding> left, std::span<const Embedding> right);

}  // namespace chgcorr
