// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include "chgcorr/error.hpp"

namespace chgcorr {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Square Kuhn-Munkres with row/column potentials. On return the potentials
// are dual-feasible (u[i] + v[j] <= a[i][j]) and tight on every matched edge.
struct SquareSolution {
  std::vector<std::size_t> col_of_row;
  std::vector<std::size_t> row_of_col;
  std::vector<double> u;
  std::vector<double> v;
};

SquareSolution solve_square(const std::vector<double>& a, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based indexing with a virtual column 0 as in the classic formulation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  SquareSolution s;
  s.col_of_row.assign(n, kNone);
  s.row_of_col.assign(n, kNone);
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  for (std::size_t j = 1; j <= n; ++j) {
    s.col_of_row[p[j] - 1] = j - 1;
    s.row_of_col[j - 1] = p[j] - 1;
  }
  return s;
}

// Every optimal matching lives in the subgraph of zero reduced cost
// (complementary slackness), so the lexicographically smallest optimum is
// found by fixing rows in order, each to the smallest column that still
// admits a perfect matching of the remaining tight subgraph.
class TieBreaker {
 public:
  TieBreaker(std::vector<char> tight, SquareSolution s, std::size_t n)
      : tight_(std::move(tight)), s_(std::move(s)), n_(n), row_locked_(n), col_locked_(n) {}

  // Try to pin `row` to `col` while keeping a perfect matching of the
  // unlocked part; on success the pin is applied.
  bool pin(std::size_t row, std::size_t col) {
    if (col_locked_[col] || !tight_[row * n_ + col]) return false;
    if (s_.col_of_row[row] == col) {
      lock(row, col);
      return true;
    }
    const std::size_t displaced = s_.row_of_col[col];
    const std::size_t freed = s_.col_of_row[row];
    // Alternating path from `displaced` to `freed` through unlocked vertices.
    std::vector<std::size_t> reached_from(n_, kNone);
    std::vector<char> row_seen(n_, 0);
    std::deque<std::size_t> queue{displaced};
    row_seen[displaced] = 1;
    bool found = false;
    while (!queue.empty() && !found) {
      const std::size_t r = queue.front();
      queue.pop_front();
      for (std::size_t c = 0; c < n_ && !found; ++c) {
        if (!tight_[r * n_ + c] || col_locked_[c] || c == col || reached_from[c] != kNone) continue;
        reached_from[c] = r;
        if (c == freed) {
          found = true;
          break;
        }
        const std::size_t next = s_.row_of_col[c];
        if (next != row && !row_locked_[next] && !row_seen[next]) {
          row_seen[next] = 1;
          queue.push_back(next);
        }
      }
    }
    if (!found) return false;
    std::size_t c = freed;
    for (;;) {
      const std::size_t r = reached_from[c];
      const std::size_t previous = s_.col_of_row[r];
      s_.col_of_row[r] = c;
      s_.row_of_col[c] = r;
      if (r == displaced) break;
      c = previous;
    }
    s_.col_of_row[row] = col;
    s_.row_of_col[col] = row;
    lock(row, col);
    return true;
  }

  std::size_t col_of_row(std::size_t row) const { return s_.col_of_row[row]; }

 private:
  void lock(std::size_t row, std::size_t col) {
    row_locked_[row] = 1;
    col_locked_[col] = 1;
  }

  std::vector<char> tight_;
  SquareSolution s_;
  std::size_t n_;
  std::vector<char> row_locked_;
  std::vector<char> col_locked_;
};

}  // namespace

Assignment hungarian(const CostMatrix& costs) {
  if (costs.empty())
    throw Error(ErrorCode::EmptyMatrix, std::to_string(costs.rows()) + "x" +
                                            std::to_string(costs.cols()) + " cost matrix");
  double scale = 0.0;
  for (std::size_t r = 0; r < costs.rows(); ++r)
    for (std::size_t c = 0; c < costs.cols(); ++c) {
      const double v = costs(r, c);
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteCost,
                    "entry (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      scale = std::max(scale, std::abs(v));
    }

  const std::size_t rows = costs.rows(), cols = costs.cols();
  const std::size_t n = std::max(rows, cols);
  // Padding with a constant (0) adds the same amount to every matching, so
  // the real part of the optimum is unaffected.
  std::vector<double> square(n * n, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) square[r * n + c] = costs(r, c);

  SquareSolution solution = solve_square(square, n);

  const double tolerance = 1e-11 * std::max(1.0, scale);
  std::vector<char> tight(n * n, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      tight[r * n + c] = square[r * n + c] - solution.u[r] - solution.v[c] <= tolerance;

  TieBreaker breaker(std::move(tight), std::move(solution), n);
  for (std::size_t r = 0; r < rows; ++r) {
    bool pinned = false;
    for (std::size_t c = 0; c < n && !pinned; ++c) pinned = breaker.pin(r, c);
    // The current matching's own edge is always pinnable, so this cannot fail.
    if (!pinned) throw Error(ErrorCode::InvalidArgument, "internal: tie-break lost the matching");
  }

  Assignment out;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = breaker.col_of_row(r);
    if (c >= cols) continue;
    out.pairs.push_back({r, c, costs(r, c)});
    out.total_cost += costs(r, c);
  }
  return out;
}

std::vector<PairLabel> label_pairs(const Assignment& assignment,
                                   std::span<const IndexPair> gt_correspondence,
                                   std::size_t n_left, std::size_t n_right) {
  const auto check = [&](std::size_t l, std::size_t r, const char* what) {
    if (l >= n_left || r >= n_right)
      throw Error(ErrorCode::IndexOutOfRange, std::string(what) + " (" + std::to_string(l) + ", " +
                                                  std::to_string(r) + ") outside " +
                                                  std::to_string(n_left) + "x" +
                                                  std::to_string(n_right));
  };
  std::set<IndexPair> truth;
  for (const auto& p : gt_correspondence) {
    check(p.left, p.right, "ground-truth pair");
    truth.insert(p);
  }
  std::vector<PairLabel> labels;
  labels.reserve(assignment.pairs.size());
  for (const auto& p : assignment.pairs) {
    check(p.left, p.right, "assigned pair");
    const IndexPair key{p.left, p.right};
    labels.push_back({key, truth.contains(key) ? PairLabelKind::Positive : PairLabelKind::Negative});
  }
  return labels;
}

}  // namespace chgcorr
