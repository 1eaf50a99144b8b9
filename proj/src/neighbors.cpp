#include "alle/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "alle/error.hpp"

namespace alle {

RowMatrix transform_rows(const RowMatrix& points, const MetricState& state) {
  if (points.cols() != state.dim()) {
    throw ConfigError("data dimension " + std::to_string(points.cols()) +
                      " does not match metric dimension " + std::to_string(state.dim()));
  }
  return points * state.factor.transpose();
}

NeighborIndex knn_euclidean(const RowMatrix& points, Index k) {
  const Index n = points.rows();
  if (k < 1 || k > n - 1) {
    throw ConfigError("K = " + std::to_string(k) + " outside [1, n-1] for n = " + std::to_string(n));
  }
  NeighborIndex index;
  index.k = k;
  index.ids.resize(static_cast<std::size_t>(n * k));
  index.distances.resize(static_cast<std::size_t>(n * k));

  std::vector<std::pair<double, Index>> candidates(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      candidates[c++] = {(points.row(i) - points.row(j)).squaredNorm(), j};
    }
    // Pair ordering compares distance first, then index: the tie rule.
    std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
    for (Index r = 0; r < k; ++r) {
      const auto& [d2, j] = candidates[static_cast<std::size_t>(r)];
      index.ids[static_cast<std::size_t>(i * k + r)] = j;
      index.distances[static_cast<std::size_t>(i * k + r)] = std::sqrt(d2);
    }
  }
  return index;
}

NeighborIndex knn(const RowMatrix& points, Index k, const MetricState& state) {
  return knn_euclidean(transform_rows(points, state), k);
}

}  // namespace alle
