#include <doctest.h>

#include <cmath>
#include <set>

#include "chgcorr/assignment.hpp"
#include "chgcorr/error.hpp"
#include "support.hpp"

using namespace chgcorr;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> pairs_of(const Assignment& a) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& p : a.pairs) out.emplace_back(p.left, p.right);
  return out;
}

CostMatrix random_matrix(SplitMix64& rng, bool integer) {
  const std::size_t n = 1 + rng.below(7), m = 1 + rng.below(7);
  CostMatrix c(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      c(i, j) = integer ? static_cast<double>(rng.below(5)) : rng.uniform(0.0, 2.0);
  return c;
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

}  // namespace

TEST_CASE("hungarian examples") {
  auto a = hungarian(CostMatrix{{0, 1}, {1, 0}});
  CHECK(pairs_of(a) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
  CHECK(a.total_cost == 0.0);

  a = hungarian(CostMatrix{{1, 2}, {2, 4}});
  CHECK(pairs_of(a) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 0}});
  CHECK(a.total_cost == 4.0);

  a = hungarian(CostMatrix{{3, 1, 2}});
  CHECK(pairs_of(a) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
  CHECK(a.total_cost == 1.0);
  CHECK(a.pairs[0].cost == 1.0);
}

TEST_CASE("hungarian errors") {
  CHECK(code_of([] { hungarian(CostMatrix(0, 3)); }) == ErrorCode::EmptyMatrix);
  CHECK(code_of([] { hungarian(CostMatrix{{1, NAN}}); }) == ErrorCode::NonFiniteCost);
  CHECK(code_of([] { hungarian(CostMatrix{{1, INFINITY}}); }) == ErrorCode::NonFiniteCost);
}

TEST_CASE("hungarian equals exhaustive optimum and breaks ties lexicographically") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 600; ++trial) {
    const bool integer = trial % 2 == 0;
    const auto c = random_matrix(rng, integer);
    const auto rows = testing::to_rows(c);
    const auto want = oracle::brute_force_assignment(rows);
    const auto got = hungarian(c);

    REQUIRE(got.pairs.size() == std::min(c.rows(), c.cols()));
    std::set<std::size_t> ls, rs;
    double sum = 0.0;
    for (const auto& p : got.pairs) {
      ls.insert(p.left);
      rs.insert(p.right);
      REQUIRE(p.cost == c(p.left, p.right));
      sum += p.cost;
    }
    REQUIRE(ls.size() == got.pairs.size());
    REQUIRE(rs.size() == got.pairs.size());
    REQUIRE(got.total_cost == sum);

    if (integer) {
      REQUIRE(got.total_cost == want.total);
      // Integer costs have exact ties, so the tie-break is observable.
      REQUIRE(pairs_of(got) == want.pairs);
    } else {
      REQUIRE(std::abs(got.total_cost - want.total) <= 1e-9);
    }
  }
}

TEST_CASE("hungarian: permutation equivariance") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_matrix(rng, false);
    std::vector<std::size_t> pr(c.rows()), pc(c.cols());
    std::iota(pr.begin(), pr.end(), std::size_t{0});
    std::iota(pc.begin(), pc.end(), std::size_t{0});
    rng.shuffle(pr);
    rng.shuffle(pc);
    CostMatrix permuted(c.rows(), c.cols());
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < c.cols(); ++j) permuted(i, j) = c(pr[i], pc[j]);

    const auto a = hungarian(c), b = hungarian(permuted);
    REQUIRE(std::abs(a.total_cost - b.total_cost) <= 1e-9);
    // Random reals have a unique optimum, so the pairs map across exactly.
    std::set<std::pair<std::size_t, std::size_t>> mapped, direct;
    for (const auto& p : b.pairs) mapped.emplace(pr[p.left], pc[p.right]);
    for (const auto& p : a.pairs) direct.emplace(p.left, p.right);
    REQUIRE(mapped == direct);
  }
}

TEST_CASE("hungarian: constant shift on square matrices") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    CostMatrix c(n, n), shifted(n, n);
    const double k = rng.uniform(-3, 3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        c(i, j) = static_cast<double>(rng.below(4));
        shifted(i, j) = c(i, j) + k;
      }
    const auto a = hungarian(c), b = hungarian(shifted);
    REQUIRE(pairs_of(a) == pairs_of(b));
    REQUIRE(std::abs(b.total_cost - (a.total_cost + static_cast<double>(n) * k)) <= 1e-9);
  }
}

TEST_CASE("hungarian on all-equal costs picks the diagonal") {
  const auto a = hungarian(CostMatrix(4, 6, 0.5));
  CHECK(pairs_of(a) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  const auto t = hungarian(CostMatrix(5, 2, 1.0));
  CHECK(pairs_of(t) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
}

TEST_CASE("label_pairs examples") {
  const std::vector<IndexPair> gt{{0, 0}, {1, 1}};
  const auto labels_for = [&](std::vector<AssignedPair> pairs, std::size_t n_right) {
    Assignment a;
    a.pairs = std::move(pairs);
    return label_pairs(a, gt, 2, n_right);
  };
  using K = PairLabelKind;

  auto l = labels_for({{0, 0, 0}, {1, 1, 0}}, 2);
  CHECK(l == std::vector<PairLabel>{{{0, 0}, K::Positive}, {{1, 1}, K::Positive}});
  l = labels_for({{0, 1, 0}, {1, 0, 0}}, 2);
  CHECK(l == std::vector<PairLabel>{{{0, 1}, K::Negative}, {{1, 0}, K::Negative}});
  l = labels_for({{0, 0, 0}, {1, 2, 0}}, 3);
  CHECK(l == std::vector<PairLabel>{{{0, 0}, K::Positive}, {{1, 2}, K::Negative}});

  CHECK(code_of([&] { labels_for({{0, 5, 0}}, 3); }) == ErrorCode::IndexOutOfRange);
  const std::vector<IndexPair> bad_gt{{7, 0}};
  CHECK(code_of([&] { label_pairs(Assignment{}, bad_gt, 2, 2); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("label_pairs: one label per pair, positives bounded by gt") {
  SplitMix64 rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_matrix(rng, true);
    const auto a = hungarian(c);
    std::vector<IndexPair> gt;
    std::vector<std::size_t> rights(c.cols());
    std::iota(rights.begin(), rights.end(), std::size_t{0});
    rng.shuffle(rights);
    for (std::size_t i = 0; i < std::min(c.rows(), c.cols()); ++i)
      if (rng.uniform() < 0.7) gt.push_back({i, rights[i]});
    const auto labels = label_pairs(a, gt, c.rows(), c.cols());
    REQUIRE(labels.size() == a.pairs.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool in_gt = std::find(gt.begin(), gt.end(), labels[i].pair) != gt.end();
      REQUIRE((labels[i].label == PairLabelKind::Positive) == in_gt);
      REQUIRE(labels[i].pair == IndexPair{a.pairs[i].left, a.pairs[i].right});
      pos += in_gt ? 1 : 0;
    }
    REQUIRE(pos <= gt.size());
  }
}
