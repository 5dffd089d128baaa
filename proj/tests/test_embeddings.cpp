#include <doctest.h>

#include <cmath>

#include "chgcorr/embeddings.hpp"
#include "chgcorr/error.hpp"
#include "support.hpp"

using namespace chgcorr;

namespace {

BoundingBox box(double x1, double y1, double x2, double y2) { return {x1, y1, x2, y2, std::nullopt}; }

// rows x cols grid over 256x256 whose patch (r, c) is filled by fn(r, c).
template <typename Fn>
FeatureGrid grid_of(std::size_t rows, std::size_t cols, std::size_t dim, Fn fn) {
  std::vector<float> data;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::vector<float> v = fn(r, c);
      data.insert(data.end(), v.begin(), v.end());
    }
  return FeatureGrid(rows, cols, dim, std::move(data), {256, 256});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Embedding random_vec(SplitMix64& rng, std::size_t dim) {
  Embedding v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("patch_indices examples") {
  const auto g = grid_of(8, 8, 1, [](auto, auto) { return std::vector<float>{1}; });
  CHECK(patch_indices(box(0, 0, 32, 32), g) == std::vector<GridCell>{{0, 0}});
  CHECK(patch_indices(box(0, 0, 256, 256), g).size() == 64);
  CHECK(patch_indices(box(16, 16, 48, 48), g) == std::vector<GridCell>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(code_of([&] { patch_indices(box(300, 300, 320, 320), g); }) == ErrorCode::NoOverlap);
  CHECK(code_of([&] { patch_indices(box(10, 10, 10, 20), g); }) == ErrorCode::NoOverlap);
}

TEST_CASE("patch_indices on non-divisible extents") {
  const FeatureGrid g(3, 3, 1, std::vector<float>(9, 1.0f), {100, 100});
  // Cell edges at 33.33 and 66.67.
  CHECK(patch_indices(box(0, 0, 33, 33), g) == std::vector<GridCell>{{0, 0}});
  CHECK(patch_indices(box(0, 0, 34, 10), g) == std::vector<GridCell>{{0, 0}, {0, 1}});
}

TEST_CASE("patch_indices matches an interval-overlap oracle") {
  const auto g = grid_of(8, 8, 1, [](auto, auto) { return std::vector<float>{1}; });
  SplitMix64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    // Snap some boxes to patch edges to exercise boundary contact.
    auto b = testing::random_box(rng, 256, 1, 120);
    if (i % 3 == 0) b = box(std::floor(b.x1 / 32) * 32, b.y1, std::ceil(b.x2 / 32) * 32, b.y2);
    std::vector<GridCell> want;
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c)
        if (oracle::overlap_1d(b.x1, b.x2, c * 32.0, (c + 1) * 32.0) > 0 &&
            oracle::overlap_1d(b.y1, b.y2, r * 32.0, (r + 1) * 32.0) > 0)
          want.push_back({r, c});
    REQUIRE(patch_indices(b, g) == want);
  }
}

TEST_CASE("mean_pool_embedding examples") {
  const auto constant = grid_of(8, 8, 3, [](auto, auto) { return std::vector<float>{1, -2, 0.5f}; });
  CHECK(mean_pool_embedding(box(5, 70, 200, 90), constant) == Embedding{1, -2, 0.5});

  const auto two = grid_of(8, 8, 2, [](std::size_t, std::size_t c) {
    return c == 0 ? std::vector<float>{1, 0} : std::vector<float>{0, 1};
  });
  CHECK(mean_pool_embedding(box(0, 0, 64, 32), two) == Embedding{0.5, 0.5});

  const auto distinct = grid_of(8, 8, 2, [](std::size_t r, std::size_t c) {
    return std::vector<float>{static_cast<float>(r), static_cast<float>(c)};
  });
  CHECK(mean_pool_embedding(box(96, 64, 128, 96), distinct) == Embedding{2, 3});
}

TEST_CASE("mean pooling ignores jitter that keeps the patch set") {
  const auto g = grid_of(8, 8, 2, [](std::size_t r, std::size_t c) {
    return std::vector<float>{static_cast<float>(r * 8 + c), static_cast<float>(r) - 3};
  });
  SplitMix64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const auto b = testing::random_box(rng, 256, 10, 100);
    const auto moved = testing::jitter(rng, b, 2.0);
    if (patch_indices(b, g) != patch_indices(moved, g)) continue;
    REQUIRE(mean_pool_embedding(b, g) == mean_pool_embedding(moved, g));
  }
}

TEST_CASE("cosine_cost examples") {
  const Embedding a{1, 2, 3}, ortho{2, -1, 0}, neg{-1, -2, -3};
  CHECK(cosine_cost(a, a) == 0.0);
  CHECK(cosine_cost(a, ortho) == 1.0);
  CHECK(cosine_cost(a, neg) == 2.0);
  const Embedding z{0, 0, 0};
  CHECK(code_of([&] { cosine_cost(a, z); }) == ErrorCode::ZeroNormEmbedding);
  const Embedding short_v{1, 2};
  CHECK(code_of([&] { cosine_cost(a, short_v); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("cosine_cost range, symmetry, scale invariance") {
  SplitMix64 rng(17);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t dim = 1 + rng.below(16);
    auto a = random_vec(rng, dim), b = random_vec(rng, dim);
    const double c = cosine_cost(a, b);
    REQUIRE(c >= 0.0);
    REQUIRE(c <= 2.0);
    REQUIRE(std::abs(c - cosine_cost(b, a)) <= 1e-9);
    const double alpha = std::exp(rng.uniform(-5, 5)), beta = std::exp(rng.uniform(-5, 5));
    for (auto& x : a) x *= alpha;
    for (auto& x : b) x *= beta;
    REQUIRE(std::abs(cosine_cost(a, b) - c) <= 1e-9);
  }
}

TEST_CASE("cost_matrix examples") {
  const Embedding u{1, 0}, v{0, 1}, mu{-1, 0};
  const std::vector<Embedding> uv{u, v};
  CHECK(cost_matrix(uv, uv) == CostMatrix{{0, 1}, {1, 0}});

  const std::vector<Embedding> l1{u}, r1{u, mu};
  CHECK(cost_matrix(l1, r1) == CostMatrix{{0, 2}});

  const std::vector<Embedding> l2{u, {1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}}, r2{v};
  const auto m = cost_matrix(l2, r2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 0) == doctest::Approx(1 - 1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(m(1, 0) == doctest::Approx(0.29289).epsilon(1e-4));
}

TEST_CASE("cost_matrix errors and transpose property") {
  const std::vector<Embedding> good{{1, 0}, {0, 1}}, zero{{1, 0}, {0, 0}}, wide{{1, 0, 0}};
  CHECK(code_of([&] { cost_matrix(good, zero); }) == ErrorCode::ZeroNormEmbedding);
  CHECK(code_of([&] { cost_matrix(good, wide); }) == ErrorCode::DimensionMismatch);
  try {
    cost_matrix(good, zero);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }

  SplitMix64 rng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<Embedding> l, r;
    for (std::size_t k = 0, n = 1 + rng.below(5); k < n; ++k) l.push_back(random_vec(rng, 4));
    for (std::size_t k = 0, n = 1 + rng.below(5); k < n; ++k) r.push_back(random_vec(rng, 4));
    const auto lr = cost_matrix(l, r);
    REQUIRE(lr.transposed() == cost_matrix(r, l));
    for (double x : lr.data()) {
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 2.0);
    }
  }
}

TEST_CASE("feature grid validation") {
  CHECK(code_of([] { FeatureGrid(2, 2, 2, std::vector<float>(7), {10, 10}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { FeatureGrid(0, 2, 2, {}, {10, 10}); }) == ErrorCode::InvalidArgument);
  std::vector<float> bad(8, 0.0f);
  bad[3] = std::nanf("");
  CHECK(code_of([&] { FeatureGrid(2, 2, 2, bad, {10, 10}); }) == ErrorCode::InvalidArgument);
}
