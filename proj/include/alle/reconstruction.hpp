#pragma once

#include <span>
#include <vector>

#include "alle/metric.hpp"
#include "alle/neighbors.hpp"
#include "alle/types.hpp"

namespace alle {

/// Sparse reconstruction weights: row i is supported on the neighbors of i.
struct WeightMatrix {
  Index k = 0;
  std::vector<Index> ids;
  std::vector<double> weights;

  Index rows() const { return k == 0 ? 0 : static_cast<Index>(ids.size()) / k; }
  std::span<const Index> neighbors(Index i) const {
    return {ids.data() + i * k, static_cast<std::size_t>(k)};
  }
  std::span<const double> row(Index i) const {
    return {weights.data() + i * k, static_cast<std::size_t>(k)};
  }
};

/// G = (x 1^T - X)^T M (x 1^T - X), where the columns of `neighbors` are the
/// neighbor points (D x K).
Matrix local_gram(const Eigen::Ref<const Vector>& point, const Eigen::Ref<const Matrix>& neighbors,
                  const MetricState& state);

/// Solves (G + reg * trace(G) / K * I) w = 1 and normalizes w to sum to one.
/// A zero-trace G (all neighbors coincide with the point) is shifted by reg * I.
Vector reconstruction_weights(const Matrix& gram, double reg);

/// Closed-form weights for every point under the metric.
WeightMatrix compute_weights(const RowMatrix& points, const NeighborIndex& neighbors,
                             const MetricState& state, double reg);

/// Same as compute_weights for rows already mapped through L.
WeightMatrix compute_weights_transformed(const RowMatrix& transformed,
                                         const NeighborIndex& neighbors, double reg);

/// r_i = x_i - Sum_j w_ij x_j, one row per point.
RowMatrix compute_residuals(const RowMatrix& points, const WeightMatrix& weights);

/// Sum_i r_i^T M r_i.
double reconstruction_error(const RowMatrix& residuals, const MetricState& state);

}  // namespace alle
