#include "alle/embedding.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <numeric>

#include "alle/error.hpp"

namespace alle {

Matrix embedding_matrix(const WeightMatrix& weights) {
  const Index n = weights.rows();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n * (weights.k + 1)));
  for (Index i = 0; i < n; ++i) {
    entries.emplace_back(i, i, 1.0);
    const auto ids = weights.neighbors(i);
    const auto w = weights.row(i);
    for (std::size_t c = 0; c < ids.size(); ++c) entries.emplace_back(i, ids[c], -w[c]);
  }
  // Duplicate (i, j) entries are summed, so self-weights fold into the diagonal.
  Eigen::SparseMatrix<double> residual_op(n, n);
  residual_op.setFromTriplets(entries.begin(), entries.end());
  const Eigen::SparseMatrix<double> cost = residual_op.transpose() * residual_op;
  Matrix dense(cost);
  return 0.5 * (dense + dense.transpose());
}

namespace {

// Component id per vertex of the off-diagonal sparsity graph.
std::vector<Index> component_labels(const Matrix& symmetric, Index& count) {
  const Index n = symmetric.rows();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  const auto find = [&](Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      auto& p = parent[static_cast<std::size_t>(v)];
      p = parent[static_cast<std::size_t>(p)];
      v = p;
    }
    return v;
  };
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      if (symmetric(i, j) == 0.0) continue;
      const Index a = find(i);
      const Index b = find(j);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  }
  std::vector<Index> labels(static_cast<std::size_t>(n));
  std::vector<Index> remap(static_cast<std::size_t>(n), -1);
  count = 0;
  for (Index v = 0; v < n; ++v) {
    auto& id = remap[static_cast<std::size_t>(find(v))];
    if (id < 0) id = count++;
    labels[static_cast<std::size_t>(v)] = id;
  }
  return labels;
}

}  // namespace

Index sparsity_components(const Matrix& symmetric) {
  Index count = 0;
  component_labels(symmetric, count);
  return count;
}

EmbeddingResult solve_embedding(const Matrix& cost, Index n_components,
                                std::optional<double> null_tol) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw ConfigError("embedding cost matrix must be square");
  if (n > kMaxDenseEmbedding) {
    throw ConfigError("n = " + std::to_string(n) + " exceeds the dense eigensolver limit of " +
                      std::to_string(kMaxDenseEmbedding) + "; subsample first");
  }
  if (n_components < 1 || n_components > n - 2) {
    throw ConfigError("n_components must lie in [1, n-2]");
  }
  if (!cost.allFinite()) throw NumericalError("embedding cost matrix has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cost);
  if (eig.info() != Eigen::Success) throw NumericalError("embedding eigensolve failed");
  const Vector& values = eig.eigenvalues();

  const double lambda_max = std::max(values(n - 1), 0.0);
  const double threshold = null_tol.value_or(1e-8 * lambda_max);
  Index max_null = 0;
  const auto components = component_labels(cost, max_null);
  Index skipped = 0;
  while (skipped < max_null && skipped < n && values(skipped) < threshold) ++skipped;

  if (n - skipped < n_components) {
    throw NumericalError("only " + std::to_string(n - skipped) +
                         " eigenvalues above the null threshold; neighbor graph is too disconnected");
  }

  // Component indicators that M_W annihilates are exact null vectors. The
  // solver only resolves them up to eps * ||M|| / gap, which is large when the
  // bottom of the spectrum is tight, so they are projected out explicitly.
  Matrix selected = eig.eigenvectors().middleCols(skipped, n_components);
  if (skipped > 0) {
    for (Index c = 0; c < max_null; ++c) {
      Vector indicator = Vector::Zero(n);
      for (Index v = 0; v < n; ++v) {
        if (components[static_cast<std::size_t>(v)] == c) indicator(v) = 1.0;
      }
      indicator.normalize();
      if ((cost * indicator).cwiseAbs().maxCoeff() > 1e-10 * std::max(lambda_max, 1.0)) continue;
      selected -= indicator * (indicator.transpose() * selected);
    }
    for (Index c = 0; c < n_components; ++c) {
      for (Index p = 0; p < c; ++p) selected.col(c) -= selected.col(p).dot(selected.col(c)) * selected.col(p);
      selected.col(c).normalize();
    }
  }

  EmbeddingResult out;
  out.null_eigenvalues.assign(values.data(), values.data() + skipped);
  out.eigenvalues = values.segment(skipped, n_components);
  out.coordinates.resize(n, n_components);
  const double scale = std::sqrt(static_cast<double>(n));
  for (Index c = 0; c < n_components; ++c) {
    Vector v = selected.col(c);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.coordinates.col(c) = scale * v;
  }
  return out;
}

}  // namespace alle
