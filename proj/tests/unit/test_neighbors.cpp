#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "alle/error.hpp"
#include "alle/neighbors.hpp"
#include "oracles.hpp"

using namespace alle;
namespace orc = alle::oracle;

namespace {

std::vector<Index> row_ids(const NeighborIndex& nb, Index i) {
  const auto s = nb.neighbors(i);
  return {s.begin(), s.end()};
}

RowMatrix line(std::initializer_list<double> xs) {
  RowMatrix out(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) out(i++, 0) = x;
  return out;
}

MetricState random_state(std::mt19937_64& rng, Index dim) {
  MetricState s;
  s.factor = orc::random_matrix(rng, dim, dim);
  return s;
}

}  // namespace

TEST(Knn, LineExample) {
  const auto nb = knn(line({0, 1, 3, 7}), 1, init_identity(1));
  EXPECT_EQ(nb.size(), 4);
  const std::vector<Index> expected{1, 0, 1, 2};
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(nb.neighbors(i)[0], expected[static_cast<std::size_t>(i)]);
  EXPECT_DOUBLE_EQ(nb.distances_of(3)[0], 4.0);
}

TEST(Knn, TiesGoToLowerIndex) {
  const auto nb = knn(line({0, -1, 1, 5}), 2, init_identity(1));
  EXPECT_EQ(row_ids(nb, 0), (std::vector<Index>{1, 2}));
  const auto dup = knn(line({2, 2, 2}), 2, init_identity(1));
  EXPECT_EQ(row_ids(dup, 1), (std::vector<Index>{0, 2}));
}

TEST(Knn, RejectsBadK) {
  const RowMatrix pts = line({0, 1, 2});
  EXPECT_THROW(knn(pts, 0, init_identity(1)), ConfigError);
  EXPECT_THROW(knn(pts, 3, init_identity(1)), ConfigError);
  EXPECT_THROW(knn(pts, 1, init_identity(2)), ConfigError);
}

TEST(Knn, MatchesSortAllPairsOracle) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix pts = orc::random_points(rng, 50, 3);
    const auto s = random_state(rng, 3);
    const auto nb = knn(pts, 5, s);
    const auto expected = orc::sort_all_pairs_knn(pts, 5, s.metric());
    for (Index i = 0; i < 50; ++i) EXPECT_EQ(row_ids(nb, i), expected[static_cast<std::size_t>(i)]);
  }
}

TEST(Knn, IdentityMatchesEuclideanOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix pts = orc::random_points(rng, 40, 4);
    const auto nb = knn(pts, 6, init_identity(4));
    const auto expected = orc::sort_all_pairs_knn(pts, 6, Matrix::Identity(4, 4));
    for (Index i = 0; i < 40; ++i) EXPECT_EQ(row_ids(nb, i), expected[static_cast<std::size_t>(i)]);
  }
}

TEST(Knn, RowInvariants) {
  std::mt19937_64 rng(22);
  const RowMatrix pts = orc::random_points(rng, 60, 3);
  const auto nb = knn(pts, 7, random_state(rng, 3));
  for (Index i = 0; i < 60; ++i) {
    const auto ids = nb.neighbors(i);
    const auto d = nb.distances_of(i);
    EXPECT_EQ(std::find(ids.begin(), ids.end(), i), ids.end());
    EXPECT_TRUE(std::is_sorted(d.begin(), d.end()));
    for (Index j : ids) {
      EXPECT_GE(j, 0);
      EXPECT_LT(j, 60);
    }
  }
}

TEST(Knn, ScaledMetricGivesSameOrder) {
  std::mt19937_64 rng(23);
  const RowMatrix pts = orc::random_points(rng, 50, 3);
  const auto s = random_state(rng, 3);
  const auto scaled = state_from_metric(4.0 * s.metric());
  const auto a = knn(pts, 5, s);
  const auto b = knn(pts, 5, scaled);
  EXPECT_EQ(a.ids, b.ids);
  const auto id1 = knn(pts, 5, init_identity(3));
  MetricState twice;
  twice.factor = 2.0 * Matrix::Identity(3, 3);
  EXPECT_EQ(id1.ids, knn(pts, 5, twice).ids);
}

TEST(Knn, PermutationEquivariance) {
  std::mt19937_64 rng(24);
  const RowMatrix pts = orc::random_points(rng, 30, 2);
  std::vector<Index> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  RowMatrix permuted(30, 2);
  for (Index i = 0; i < 30; ++i) permuted.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);
  std::vector<Index> inverse(30);
  for (Index i = 0; i < 30; ++i) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;

  const auto a = knn(pts, 4, init_identity(2));
  const auto b = knn(permuted, 4, init_identity(2));
  for (Index i = 0; i < 30; ++i) {
    const auto orig = row_ids(a, perm[static_cast<std::size_t>(i)]);
    for (Index r = 0; r < 4; ++r) {
      EXPECT_EQ(b.neighbors(i)[static_cast<std::size_t>(r)], inverse[static_cast<std::size_t>(orig[static_cast<std::size_t>(r)])]);
    }
  }
}

TEST(Knn, SmallerKIsPrefix) {
  std::mt19937_64 rng(25);
  const RowMatrix pts = orc::random_points(rng, 40, 3);
  const auto s = random_state(rng, 3);
  for (Index k = 1; k < 8; ++k) {
    const auto small = knn(pts, k, s);
    const auto big = knn(pts, k + 1, s);
    for (Index i = 0; i < 40; ++i) {
      const auto a = small.neighbors(i);
      const auto b = big.neighbors(i);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(TransformRows, AppliesFactor) {
  MetricState s;
  s.factor = Matrix{{1, 2}, {0, 3}};
  RowMatrix pts(1, 2);
  pts << 1, 1;
  const RowMatrix z = transform_rows(pts, s);
  EXPECT_DOUBLE_EQ(z(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(z(0, 1), 3.0);
}
