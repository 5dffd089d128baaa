// SPDX-License-Identifier: Apache-2.0
#include "chgcorr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chgcorr/error.hpp"

namespace chgcorr {

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "below(0)");
  // Reject the first (2^64 mod bound) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

double SplitMix64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(theta);
  has_spare_ = true;
  return radius * std::cos(theta);
}

std::vector<std::size_t> SplitMix64::sample_distinct(std::size_t n, std::size_t count) {
  if (count > n) throw Error(ErrorCode::InvalidArgument, "sample larger than population");
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto candidate = static_cast<std::size_t>(below(n));
    if (std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(candidate);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 mixer(base ^ (stream * 0xD1B54A32D192ED03ULL));
  return mixer.next();
}

}  // namespace chgcorr
