// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chgcorr/cost_matrix.hpp"

namespace chgcorr {

struct IndexPair {
  std::size_t left = 0;
  std::size_t right = 0;

  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

struct AssignedPair {
  std::size_t left = 0;
  std::size_t right = 0;
  double cost = 0.0;

  friend bool operator==(const AssignedPair&, const AssignedPair&) = default;
};

// Pairs are sorted by left index; `total_cost` is their summed cost.
struct Assignment {
  std::vector<AssignedPair> pairs;
  double total_cost = 0.0;
};

// Minimum-total-cost matching of cardinality min(rows, cols) (Kuhn-Munkres
// with potentials on the zero-padded square problem). Among all optimal
// matchings the lexicographically smallest pair list is returned, so equal
// inputs always produce equal outputs.
//
// Throws EmptyMatrix for a matrix without rows or columns and NonFiniteCost
// for NaN/inf entries.
Assignment hungarian(const CostMatrix& costs);

enum class PairLabelKind { Positive, Negative };

struct PairLabel {
  IndexPair pair;
  PairLabelKind label = PairLabelKind::Negative;

  friend bool operator==(const PairLabel&, const PairLabel&) = default;
};

// Positive iff the exact (left, right) pair appears in `gt_correspondence`.
// Indices are checked against the box-list sizes (IndexOutOfRange).
std::vector<PairLabel> label_pairs(const Assignment& assignment,
                                   std::span<const IndexPair> gt_correspondence,
                                   std::size_t n_left, std::size_t n_right);

}  // namespace chgcorr
