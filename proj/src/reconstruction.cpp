#include "alle/reconstruction.hpp"

#include <cmath>

#include "alle/error.hpp"

namespace alle {

namespace {

Matrix gram_of_differences(const Eigen::Ref<const Vector>& point,
                           const Eigen::Ref<const Matrix>& neighbors) {
  const Matrix diff = point.replicate(1, neighbors.cols()) - neighbors;
  const Matrix gram = diff.transpose() * diff;
  return 0.5 * (gram + gram.transpose());
}

}  // namespace

Matrix local_gram(const Eigen::Ref<const Vector>& point, const Eigen::Ref<const Matrix>& neighbors,
                  const MetricState& state) {
  if (neighbors.cols() < 1) throw ConfigError("local Gram needs at least one neighbor");
  if (point.size() != state.dim() || neighbors.rows() != state.dim()) {
    throw ConfigError("neighborhood dimension does not match metric dimension");
  }
  const Vector z = state.factor * point;
  const Matrix zn = state.factor * neighbors;
  return gram_of_differences(z, zn);
}

Vector reconstruction_weights(const Matrix& gram, double reg) {
  const Index k = gram.rows();
  if (k < 1 || gram.cols() != k) throw ConfigError("Gram matrix must be square and non-empty");
  if (!(reg >= 0.0)) throw ConfigError("Gram regularization must be non-negative");

  const double trace = gram.trace();
  const double shift = trace > 0.0 ? reg * trace / static_cast<double>(k) : reg;
  Matrix regularized = gram;
  regularized.diagonal().array() += shift;

  const Vector w = regularized.ldlt().solve(Vector::Ones(k));
  const double total = w.sum();
  if (!w.allFinite() || !std::isfinite(total) || std::abs(total) <= 1e-12) {
    throw NumericalError("degenerate neighborhood: reconstruction weights cannot be normalized");
  }
  return w / total;
}

WeightMatrix compute_weights_transformed(const RowMatrix& transformed,
                                         const NeighborIndex& neighbors, double reg) {
  const Index n = transformed.rows();
  const Index k = neighbors.k;
  if (neighbors.size() != n) throw ConfigError("neighbor index does not match the data");

  WeightMatrix out;
  out.k = k;
  out.ids = neighbors.ids;
  out.weights.resize(static_cast<std::size_t>(n * k));

  Matrix local(transformed.cols(), k);
  for (Index i = 0; i < n; ++i) {
    const auto ids = neighbors.neighbors(i);
    for (Index c = 0; c < k; ++c) local.col(c) = transformed.row(ids[static_cast<std::size_t>(c)]).transpose();
    const Vector w = reconstruction_weights(gram_of_differences(transformed.row(i).transpose(), local), reg);
    std::copy(w.data(), w.data() + k, out.weights.begin() + i * k);
  }
  return out;
}

WeightMatrix compute_weights(const RowMatrix& points, const NeighborIndex& neighbors,
                             const MetricState& state, double reg) {
  if (points.cols() != state.dim()) throw ConfigError("data dimension does not match metric");
  return compute_weights_transformed(points * state.factor.transpose(), neighbors, reg);
}

RowMatrix compute_residuals(const RowMatrix& points, const WeightMatrix& weights) {
  const Index n = points.rows();
  if (weights.rows() != n) throw ConfigError("weight rows do not match the data");
  RowMatrix residuals = points;
  for (Index i = 0; i < n; ++i) {
    const auto ids = weights.neighbors(i);
    const auto w = weights.row(i);
    for (std::size_t c = 0; c < ids.size(); ++c) residuals.row(i) -= w[c] * points.row(ids[c]);
  }
  return residuals;
}

double reconstruction_error(const RowMatrix& residuals, const MetricState& state) {
  if (residuals.rows() == 0) return 0.0;
  if (residuals.cols() != state.dim()) throw ConfigError("residual dimension does not match metric");
  return (residuals * state.factor.transpose()).squaredNorm();
}

}  // namespace alle
