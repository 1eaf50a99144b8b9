#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "alle/data.hpp"
#include "alle/embedding.hpp"
#include "alle/metric.hpp"

namespace alle {

enum class MetricInit { Identity, Random };
enum class NeighborRefresh { Never, EveryEpoch };

struct PipelineConfig {
  Index n_components = 2;
  Index n_neighbors = 10;
  Index max_epochs = 50;
  OptimizerConfig optimizer;
  MetricInit metric_init = MetricInit::Identity;
  double init_sigma = 0.1;
  /// Starting metric M (overrides metric_init), e.g. from a checkpoint.
  std::optional<Matrix> initial_metric;
  NeighborRefresh recompute_neighbors = NeighborRefresh::Never;
  double gram_reg = 1e-2;
  std::optional<double> null_tol;
  /// Stop once |dE| / max(E, 1e-12) < 1e-9 for three consecutive epochs.
  bool early_stop = true;
  std::uint64_t seed = 0;

  void validate(Index n, Index dim) const;
};

struct EpochRecord {
  Index epoch = 0;
  /// E(M) with this epoch's weights and the updated metric.
  double error = 0.0;
  /// Step size actually applied (after any clamp).
  double learning_rate = 0.0;
  /// 2 / lambda_max(Sum r r^T) at this epoch; +inf when residuals vanish.
  double bound = 0.0;
  bool exceeded_bound = false;
  bool clamped = false;
};

struct FitResult {
  EmbeddingResult embedding;
  std::vector<EpochRecord> epochs;
  MetricState metric;
  PipelineConfig config;
};

/// Adaptive LLE: alternate closed-form weights and metric steps for
/// max_epochs, then embed with weights computed under the final metric.
FitResult fit_alle(const DataMatrix& data, const PipelineConfig& config);

/// Plain LLE: Euclidean neighbors and weights, no metric updates.
FitResult fit_lle(const DataMatrix& data, const PipelineConfig& config);

}  // namespace alle
