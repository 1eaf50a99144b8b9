#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alle/types.hpp"

namespace alle {

/// rank(i, j): 1-based position of j among i's Euclidean neighbors, self
/// excluded, ties broken by lower index. rank(i, i) is 0.
struct RankTable {
  Index n = 0;
  std::vector<std::int32_t> ranks;

  std::int32_t rank(Index i, Index j) const { return ranks[static_cast<std::size_t>(i * n + j)]; }
};

RankTable rank_table(const RowMatrix& points);

/// Venna-Kaski trustworthiness: penalizes embedding neighbors that are not
/// original neighbors by their original-space rank. Requires 1 <= k and
/// 2n - 3k - 1 > 0.
double trustworthiness(const RowMatrix& original, const RowMatrix& embedded, Index k);

/// Mirror of trustworthiness: original neighbors missing from the embedding,
/// penalized by embedding-space rank.
double continuity(const RowMatrix& original, const RowMatrix& embedded, Index k);

/// Mean silhouette with Euclidean distances. Points in singleton clusters score 0.
double silhouette(const RowMatrix& points, std::span<const int> labels);

enum class SplitKind { Stratified, TrainEqualsTest };

struct Split {
  SplitKind kind = SplitKind::Stratified;
  double test_fraction = 0.25;
  std::uint64_t seed = 0;

  std::string describe() const;
};

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Per class, a seeded shuffle puts round(test_fraction * size) points (at
/// least one, leaving at least one) into the test set.
SplitIndices make_split(std::span<const int> labels, const Split& split);

/// Majority vote over k_classify Euclidean neighbors from the train set;
/// ties go to the smallest label. Under TrainEqualsTest a point never votes for itself.
double knn_accuracy(const RowMatrix& points, std::span<const int> labels, Index k_classify,
                    const Split& split);

/// Multinomial logistic regression (L2 penalty 1e-4) on standardized features.
double linear_accuracy(const RowMatrix& points, std::span<const int> labels, const Split& split);

struct QualityReport {
  double trustworthiness = 0.0;
  double continuity = 0.0;
  Index k = 0;
  std::optional<double> silhouette;
  std::optional<double> knn_accuracy;
  std::optional<double> linear_accuracy;
  std::optional<std::string> split;
};

QualityReport evaluate_embedding(const RowMatrix& original, const RowMatrix& embedded, Index k,
                                 const std::optional<std::vector<int>>& labels,
                                 Index k_classify = 5, const Split& split = {});

}  // namespace alle
