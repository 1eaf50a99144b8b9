#include "alle/metric.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "alle/data.hpp"
#include "alle/error.hpp"

namespace alle {

namespace {

constexpr double kIndefiniteTol = 1e-8;

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + " produced non-finite values");
}

void require_residual_dim(const RowMatrix& residuals, Index dim) {
  if (residuals.rows() > 0 && residuals.cols() != dim) {
    throw ConfigError("residual dimension " + std::to_string(residuals.cols()) +
                      " does not match metric dimension " + std::to_string(dim));
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(regularization >= 0.0)) throw ConfigError("regularization must be non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

Matrix MetricState::metric() const { return symmetrized(factor.transpose() * factor); }

MetricState init_identity(Index dim) {
  if (dim < 1) throw ConfigError("metric dimension must be >= 1");
  MetricState state;
  state.factor = Matrix::Identity(dim, dim);
  return state;
}

MetricState init_random(Index dim, double sigma, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("metric dimension must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  MetricState state;
  state.factor.resize(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) state.factor(i, j) = gauss(rng);
  }
  return state;
}

MetricState state_from_metric(const Matrix& metric) {
  MetricState state;
  state.factor = cholesky_factor(metric).transpose();
  return state;
}

double mahalanobis_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                            const MetricState& state) {
  if (x.size() != state.dim() || y.size() != state.dim()) {
    throw ConfigError("vector length does not match metric dimension");
  }
  const Vector diff = x - y;
  return std::sqrt((state.factor * diff).squaredNorm());
}

Matrix residual_gradient_M(const RowMatrix& residuals, Index dim) {
  require_residual_dim(residuals, dim);
  if (residuals.rows() == 0) return Matrix::Zero(dim, dim);
  return symmetrized(residuals.transpose() * residuals);
}

DirectUpdate sgd_update_M(const MetricState& state, const RowMatrix& residuals, double eta) {
  if (!(eta > 0.0)) throw ConfigError("learning rate must be positive");
  const Index dim = state.dim();
  DirectUpdate out;
  out.raw_metric = state.metric() - eta * residual_gradient_M(residuals, dim);
  require_finite(out.raw_metric, "direct metric update");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.raw_metric);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolve failed in metric repair");
  out.min_eigenvalue = eig.eigenvalues()(0);
  out.psd_warning = out.min_eigenvalue < -kIndefiniteTol;

  out.state = state;
  out.state.factor = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                     eig.eigenvectors().transpose();
  ++out.state.step;
  return out;
}

MetricState sgd_update_L(const MetricState& state, const RowMatrix& residuals, double eta,
                         double lambda) {
  if (!(eta > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("regularization must be non-negative");
  MetricState out = state;
  out.factor = state.factor - eta * gradient_L(state, residuals) + lambda * state.factor;
  require_finite(out.factor, "factor update");
  ++out.step;
  return out;
}

Matrix gradient_L(const MetricState& state, const RowMatrix& residuals) {
  return 2.0 * state.factor * residual_gradient_M(residuals, state.dim());
}

MetricState adam_update_L(const MetricState& state, const Matrix& gradient,
                          const OptimizerConfig& config) {
  config.validate();
  const Index dim = state.dim();
  if (gradient.rows() != dim || gradient.cols() != dim) {
    throw ConfigError("gradient shape does not match the metric factor");
  }
  MetricState out = state;
  if (out.adam_m.size() == 0) out.adam_m = Matrix::Zero(dim, dim);
  if (out.adam_v.size() == 0) out.adam_v = Matrix::Zero(dim, dim);
  if (out.adam_m.rows() != dim || out.adam_m.cols() != dim || out.adam_v.rows() != dim ||
      out.adam_v.cols() != dim) {
    throw ConfigError("Adam moment accumulators do not match the metric factor");
  }

  ++out.step;
  const double t = static_cast<double>(out.step);
  out.adam_m = config.beta1 * out.adam_m + (1.0 - config.beta1) * gradient;
  out.adam_v = config.beta2 * out.adam_v + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const Matrix m_hat = out.adam_m / (1.0 - std::pow(config.beta1, t));
  const Matrix v_hat = out.adam_v / (1.0 - std::pow(config.beta2, t));
  out.factor -= config.learning_rate *
                m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + config.epsilon).matrix());
  if (config.regularization > 0.0) out.factor += config.regularization * out.factor;
  require_finite(out.factor, "Adam update");
  return out;
}

double learning_rate_bound(const RowMatrix& residuals) {
  if (residuals.rows() == 0 || residuals.isZero(0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  const Matrix hessian = residual_gradient_M(residuals, residuals.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolve failed in step bound");
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (!(lambda_max > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 / lambda_max;
}

Matrix cholesky_factor(const Matrix& metric) {
  const Index dim = metric.rows();
  if (dim < 1 || metric.cols() != dim) throw ConfigError("metric must be square and non-empty");
  if (!metric.allFinite()) throw NumericalError("metric contains non-finite values");
  const double scale = std::max(1.0, metric.cwiseAbs().maxCoeff());
  if ((metric - metric.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw NumericalError("metric is not symmetric");
  }
  Matrix sym = symmetrized(metric);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolve failed in Cholesky check");
  const double min_eig = eig.eigenvalues()(0);
  if (min_eig < -kIndefiniteTol) {
    throw NumericalError("metric is indefinite (min eigenvalue " + std::to_string(min_eig) + ")");
  }
  if (min_eig <= 1e-12) {
    const double trace = sym.trace();
    const double jitter = trace > 0.0 ? 1e-10 * trace / static_cast<double>(dim) : 1e-10;
    sym.diagonal().array() += jitter;
  }
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization failed");
  return llt.matrixL();
}

Matrix psd_factor(const Matrix& metric) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(metric));
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolve failed in PSD projection");
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

void write_metric_csv(const std::filesystem::path& path, const MetricState& state) {
  DataMatrix table;
  table.values = state.factor;
  write_csv(path, table, /*header=*/false);
}

MetricState read_metric_csv(const std::filesystem::path& path) {
  const DataMatrix table = load_csv(path);
  if (table.rows() != table.dims()) {
    throw FormatError(path.string() + ": metric factor must be square, got " +
                      std::to_string(table.rows()) + "x" + std::to_string(table.dims()));
  }
  MetricState state;
  state.factor = table.values;
  return state;
}

}  // namespace alle
