// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/cost_matrix.hpp"

#include "chgcorr/error.hpp"

namespace chgcorr {

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "ragged cost matrix");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

CostMatrix CostMatrix::transposed() const {
  CostMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

}  // namespace chgcorr
