#pragma once

#include <optional>
#include <vector>

#include "alle/reconstruction.hpp"
#include "alle/types.hpp"

namespace alle {

/// Dense eigensolves beyond this size are refused; subsample first.
inline constexpr Index kMaxDenseEmbedding = 4000;

struct EmbeddingResult {
  /// n x d coordinates, centered, with (1/n) Y^T Y = I.
  RowMatrix coordinates;
  /// Eigenvalues of the selected eigenvectors, ascending.
  Vector eigenvalues;
  /// Eigenvalues treated as the null space and skipped.
  std::vector<double> null_eigenvalues;
  /// E(M) after each completed epoch (empty for plain LLE).
  std::vector<double> error_trace;
  /// Whether the learning rate exceeded the stability bound at any epoch.
  bool eta_guard = false;
};

/// (I - W)^T (I - W) as a dense n x n matrix.
Matrix embedding_matrix(const WeightMatrix& weights);

/// Number of connected components of the graph given by the off-diagonal
/// nonzeros of a symmetric matrix.
Index sparsity_components(const Matrix& symmetric);

/// Bottom eigenvectors of M_W, excluding the null space.
///
/// The null space is the smallest eigenvalues, at most one per connected
/// component of M_W's sparsity graph, that fall below null_tol. With no
/// null_tol the threshold is 1e-8 * lambda_max. Selected eigenvectors are
/// scaled by sqrt(n) and sign-fixed so each column's largest-magnitude entry
/// is positive.
EmbeddingResult solve_embedding(const Matrix& cost, Index n_components,
                                std::optional<double> null_tol = std::nullopt);

}  // namespace alle
