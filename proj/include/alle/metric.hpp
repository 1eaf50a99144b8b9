#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>

#include "alle/types.hpp"

namespace alle {

enum class OptimizerMethod { Sgd, Adam };

/// FactorL updates L and keeps M = L^T L PSD by construction. DirectM steps M
/// itself and repairs negative eigenvalues afterwards.
enum class MetricMode { FactorL, DirectM };

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::Sgd;
  double learning_rate = 1e-3;
  double regularization = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  MetricMode mode = MetricMode::FactorL;
  bool enforce_eta_bound = true;

  void validate() const;
};

/// Learned Mahalanobis metric. The factor L is canonical; M = L^T L is derived.
struct MetricState {
  Matrix factor;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step = 0;

  Index dim() const { return factor.rows(); }
  /// L^T L, symmetrized so the two triangles agree bit-for-bit.
  Matrix metric() const;
};

MetricState init_identity(Index dim);

/// L_ij ~ N(0, sigma^2).
MetricState init_random(Index dim, double sigma, std::uint64_t seed);

/// Enter factor form from a user-supplied PSD metric: L = C^T where C C^T = M.
MetricState state_from_metric(const Matrix& metric);

/// sqrt((x - y)^T M (x - y)), evaluated as ||L (x - y)||.
double mahalanobis_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                            const MetricState& state);

/// Sum_i r_i r_i^T for residual rows r_i. Zero rows give the zero matrix.
Matrix residual_gradient_M(const RowMatrix& residuals, Index dim);

struct DirectUpdate {
  /// Metric after the step and PSD repair.
  MetricState state;
  /// M - eta * Sum r r^T before repair.
  Matrix raw_metric;
  double min_eigenvalue = 0.0;
  /// Set when the raw step left M indefinite (min eigenvalue < -1e-8).
  bool psd_warning = false;
};

DirectUpdate sgd_update_M(const MetricState& state, const RowMatrix& residuals, double eta);

/// L <- L - 2 eta L Sum r r^T + lambda L.
MetricState sgd_update_L(const MetricState& state, const RowMatrix& residuals, double eta,
                         double lambda);

/// dE/dL = 2 L Sum r r^T.
Matrix gradient_L(const MetricState& state, const RowMatrix& residuals);

/// One bias-corrected Adam step on L followed by L <- L + lambda L.
MetricState adam_update_L(const MetricState& state, const Matrix& gradient,
                          const OptimizerConfig& config);

/// 2 / lambda_max(Sum r r^T), or +infinity when every residual is zero.
double learning_rate_bound(const RowMatrix& residuals);

inline bool is_unbounded(double bound) { return bound == std::numeric_limits<double>::infinity(); }

/// Lower-triangular C with C C^T = M. Eigenvalues in [-1e-8, 1e-12] trigger a
/// 1e-10 * trace(M) / D diagonal jitter; anything more negative is rejected.
Matrix cholesky_factor(const Matrix& metric);

/// Clamp negative eigenvalues to zero and return the factor Lambda^{1/2} V^T.
Matrix psd_factor(const Matrix& metric);

void write_metric_csv(const std::filesystem::path& path, const MetricState& state);
MetricState read_metric_csv(const std::filesystem::path& path);

}  // namespace alle
