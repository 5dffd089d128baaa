// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "chgcorr/cost_matrix.hpp"
#include "chgcorr/geometry.hpp"
#include "chgcorr/rng.hpp"
#include "oracles.hpp"

namespace testing {

inline oracle::Box to_oracle(const chgcorr::BoundingBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

inline std::vector<std::vector<double>> to_rows(const chgcorr::CostMatrix& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) rows[r].assign(m.row(r).begin(), m.row(r).end());
  return rows;
}

inline chgcorr::BoundingBox random_box(chgcorr::SplitMix64& rng, double extent, double min_side,
                                       double max_side) {
  const double w = rng.uniform(min_side, max_side);
  const double h = rng.uniform(min_side, max_side);
  const double x = rng.uniform(0.0, extent - w);
  const double y = rng.uniform(0.0, extent - h);
  return {x, y, x + w, y + h, std::nullopt};
}

// Nudges a box by a few pixels so the perturbed copy still overlaps.
inline chgcorr::BoundingBox jitter(chgcorr::SplitMix64& rng, const chgcorr::BoundingBox& b, double px) {
  const double x1 = b.x1 + rng.uniform(-px, px);
  const double y1 = b.y1 + rng.uniform(-px, px);
  const double x2 = std::max(x1 + 1.0, b.x2 + rng.uniform(-px, px));
  const double y2 = std::max(y1 + 1.0, b.y2 + rng.uniform(-px, px));
  return {x1, y1, x2, y2, b.score};
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("chgcorr_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
