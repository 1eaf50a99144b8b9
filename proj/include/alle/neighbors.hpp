#pragma once

#include <span>
#include <vector>

#include "alle/metric.hpp"
#include "alle/types.hpp"

namespace alle {

/// Per-point neighbor lists in ascending distance, ties broken by lower index.
struct NeighborIndex {
  Index k = 0;
  std::vector<Index> ids;
  std::vector<double> distances;

  Index size() const { return k == 0 ? 0 : static_cast<Index>(ids.size()) / k; }
  std::span<const Index> neighbors(Index i) const {
    return {ids.data() + i * k, static_cast<std::size_t>(k)};
  }
  std::span<const double> distances_of(Index i) const {
    return {distances.data() + i * k, static_cast<std::size_t>(k)};
  }
};

/// Exact brute-force K nearest neighbors under d_M.
NeighborIndex knn(const RowMatrix& points, Index k, const MetricState& state);

/// Exact brute-force Euclidean K nearest neighbors. Rows are expected to be
/// already mapped through L when a metric is in play.
NeighborIndex knn_euclidean(const RowMatrix& points, Index k);

/// Rows mapped through the metric factor: z_i = L x_i.
RowMatrix transform_rows(const RowMatrix& points, const MetricState& state);

}  // namespace alle
