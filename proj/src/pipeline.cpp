#include "alle/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "alle/error.hpp"
#include "alle/neighbors.hpp"
#include "alle/reconstruction.hpp"

namespace alle {

namespace {

constexpr double kStallTolerance = 1e-9;
constexpr int kStallEpochs = 3;
constexpr double kClampFraction = 0.9;

MetricState initial_state(const PipelineConfig& config, Index dim) {
  if (config.initial_metric) {
    if (config.initial_metric->rows() != dim || config.initial_metric->cols() != dim) {
      throw ConfigError("initial metric must be " + std::to_string(dim) + "x" + std::to_string(dim));
    }
    return state_from_metric(*config.initial_metric);
  }
  if (config.metric_init == MetricInit::Random) return init_random(dim, config.init_sigma, config.seed);
  return init_identity(dim);
}

// Multiplier on Sum r r^T that the configured step applies. The factor-form
// SGD step is L (I - 2 eta G), so its effective rate is 2 eta.
double effective_rate_multiplier(const OptimizerConfig& opt) {
  return opt.method == OptimizerMethod::Sgd && opt.mode == MetricMode::FactorL ? 2.0 : 1.0;
}

EmbeddingResult embed(const RowMatrix& points, const NeighborIndex& neighbors,
                      const MetricState& state, const PipelineConfig& config) {
  const WeightMatrix weights = compute_weights(points, neighbors, state, config.gram_reg);
  return solve_embedding(embedding_matrix(weights), config.n_components, config.null_tol);
}

}  // namespace

void PipelineConfig::validate(Index n, Index dim) const {
  if (n_components < 1) throw ConfigError("n_components must be >= 1");
  if (n_components > n - 2) throw ConfigError("n_components must be <= n - 2");
  if (n_neighbors < 1 || n_neighbors > n - 1) throw ConfigError("n_neighbors must lie in [1, n-1]");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (!(gram_reg >= 0.0)) throw ConfigError("gram regularization must be non-negative");
  if (null_tol && !(*null_tol >= 0.0)) throw ConfigError("null tolerance must be non-negative");
  if (metric_init == MetricInit::Random && !(init_sigma > 0.0)) {
    throw ConfigError("random metric init needs sigma > 0");
  }
  if (initial_metric && (initial_metric->rows() != dim || initial_metric->cols() != dim)) {
    throw ConfigError("initial metric shape does not match the data dimension");
  }
  if (optimizer.method == OptimizerMethod::Adam && optimizer.mode == MetricMode::DirectM) {
    throw ConfigError("Adam updates the factor L; use factorL mode");
  }
  optimizer.validate();
}

FitResult fit_alle(const DataMatrix& data, const PipelineConfig& config) {
  data.validate();
  config.validate(data.rows(), data.dims());
  const RowMatrix& points = data.values;
  const OptimizerConfig& opt = config.optimizer;

  FitResult result;
  result.config = config;
  MetricState state = initial_state(config, data.dims());
  NeighborIndex neighbors = knn(points, config.n_neighbors, state);

  int stalled = 0;
  for (Index epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.recompute_neighbors == NeighborRefresh::EveryEpoch && epoch > 1) {
      neighbors = knn(points, config.n_neighbors, state);
    }
    const WeightMatrix weights = compute_weights(points, neighbors, state, config.gram_reg);
    const RowMatrix residuals = compute_residuals(points, weights);

    EpochRecord record;
    record.epoch = epoch;
    record.bound = learning_rate_bound(residuals);
    record.learning_rate = opt.learning_rate;
    const double multiplier = effective_rate_multiplier(opt);
    if (!is_unbounded(record.bound) && multiplier * opt.learning_rate >= record.bound) {
      record.exceeded_bound = true;
      result.embedding.eta_guard = true;
      if (opt.enforce_eta_bound) {
        record.learning_rate = kClampFraction * record.bound / multiplier;
        record.clamped = true;
      }
    }

    if (opt.method == OptimizerMethod::Adam) {
      OptimizerConfig step = opt;
      step.learning_rate = record.learning_rate;
      state = adam_update_L(state, gradient_L(state, residuals), step);
    } else if (opt.mode == MetricMode::FactorL) {
      state = sgd_update_L(state, residuals, record.learning_rate, opt.regularization);
    } else {
      state = sgd_update_M(state, residuals, record.learning_rate).state;
    }

    record.error = reconstruction_error(residuals, state);
    if (!std::isfinite(record.error)) {
      throw NumericalError("reconstruction error became non-finite at epoch " + std::to_string(epoch));
    }
    result.epochs.push_back(record);
    result.embedding.error_trace.push_back(record.error);

    if (config.early_stop && result.epochs.size() >= 2) {
      const double previous = result.epochs[result.epochs.size() - 2].error;
      const double change = std::abs(record.error - previous) / std::max(record.error, 1e-12);
      stalled = change < kStallTolerance ? stalled + 1 : 0;
      if (stalled >= kStallEpochs) break;
    }
  }

  if (config.recompute_neighbors == NeighborRefresh::EveryEpoch && !result.epochs.empty()) {
    neighbors = knn(points, config.n_neighbors, state);
  }
  EmbeddingResult solved = embed(points, neighbors, state, config);
  solved.error_trace = std::move(result.embedding.error_trace);
  solved.eta_guard = result.embedding.eta_guard;
  result.embedding = std::move(solved);
  result.metric = std::move(state);
  return result;
}

FitResult fit_lle(const DataMatrix& data, const PipelineConfig& config) {
  data.validate();
  config.validate(data.rows(), data.dims());
  FitResult result;
  result.config = config;
  result.config.max_epochs = 0;
  result.config.metric_init = MetricInit::Identity;
  result.config.initial_metric.reset();
  result.metric = init_identity(data.dims());
  const NeighborIndex neighbors = knn(data.values, config.n_neighbors, result.metric);
  result.embedding = embed(data.values, neighbors, result.metric, config);
  return result;
}

}  // namespace alle
