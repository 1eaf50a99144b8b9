#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "alle/alle.hpp"

namespace py = pybind11;
using namespace alle;

namespace {

template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, 1> as_column(const std::vector<T>& v) {
  return Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(v.data(), static_cast<Index>(v.size()));
}

DataMatrix as_data(const RowMatrix& x) {
  DataMatrix d;
  d.values = x;
  return d;
}

template <typename T>
T pick(const std::string& value, std::initializer_list<std::pair<const char*, T>> choices, const char* what) {
  for (const auto& [name, v] : choices) {
    if (value == name) return v;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + value + "'");
}

Split make_split_config(const std::string& kind, double test_fraction, std::uint64_t seed) {
  return {pick<SplitKind>(kind, {{"stratified", SplitKind::Stratified}, {"train-equals-test", SplitKind::TrainEqualsTest}},
                          "split"),
          test_fraction, seed};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Locally linear embedding with a learned Mahalanobis metric";
  m.attr("__version__") = ALLE_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("error", &EpochRecord::error)
      .def_readonly("learning_rate", &EpochRecord::learning_rate)
      .def_readonly("bound", &EpochRecord::bound)
      .def_readonly("exceeded_bound", &EpochRecord::exceeded_bound)
      .def_readonly("clamped", &EpochRecord::clamped);

  py::class_<FitResult>(m, "FitResult")
      .def_property_readonly("embedding", [](const FitResult& r) { return r.embedding.coordinates; })
      .def_property_readonly("eigenvalues", [](const FitResult& r) { return r.embedding.eigenvalues; })
      .def_property_readonly("null_eigenvalues", [](const FitResult& r) { return r.embedding.null_eigenvalues; })
      .def_property_readonly("error_trace", [](const FitResult& r) { return as_column(r.embedding.error_trace); })
      .def_property_readonly("eta_guard", [](const FitResult& r) { return r.embedding.eta_guard; })
      .def_property_readonly("metric", [](const FitResult& r) { return r.metric.metric(); })
      .def_property_readonly("factor", [](const FitResult& r) { return r.metric.factor; })
      .def_readonly("epochs", &FitResult::epochs);

  m.def(
      "generate_swiss_roll",
      [](Index n, double noise, std::uint64_t seed) {
        auto d = generate_swiss_roll(n, noise, seed);
        return py::make_tuple(d.values, as_column(*d.color));
      },
      py::arg("n"), py::arg("noise") = 0.0, py::arg("seed") = 0,
      "Swiss roll samples (n x 3) and the roll parameter t per point.");

  m.def(
      "scale_features",
      [](const RowMatrix& x, const std::vector<double>& factors) {
        return scale_features(as_data(x), factors).values;
      },
      py::arg("x"), py::arg("factors"));

  m.def(
      "builtin_iris",
      []() {
        auto d = builtin_iris();
        return py::make_tuple(d.values, as_column(*d.labels));
      },
      "Fisher's Iris table (150 x 4) and labels 0, 1, 2.");

  m.def(
      "fit_lle",
      [](const RowMatrix& x, Index n_neighbors, Index n_components, double gram_reg,
         std::optional<double> null_tol) {
        PipelineConfig cfg;
        cfg.n_neighbors = n_neighbors;
        cfg.n_components = n_components;
        cfg.gram_reg = gram_reg;
        cfg.null_tol = null_tol;
        py::gil_scoped_release release;
        return fit_lle(as_data(x), cfg);
      },
      py::arg("x"), py::arg("n_neighbors") = 10, py::arg("n_components") = 2,
      py::arg("gram_reg") = PipelineConfig{}.gram_reg, py::arg("null_tol") = py::none());

  m.def(
      "fit_alle",
      [](const RowMatrix& x, Index n_neighbors, Index n_components, Index max_epochs, const std::string& optimizer,
         double learning_rate, double regularization, const std::string& metric_init, double init_sigma,
         const std::string& metric_mode, const std::string& recompute_neighbors, double gram_reg,
         std::optional<double> null_tol, bool early_stop, bool enforce_eta_bound, std::uint64_t seed,
         std::optional<Matrix> initial_metric) {
        PipelineConfig cfg;
        cfg.n_neighbors = n_neighbors;
        cfg.n_components = n_components;
        cfg.max_epochs = max_epochs;
        cfg.optimizer.method =
            pick<OptimizerMethod>(optimizer, {{"sgd", OptimizerMethod::Sgd}, {"adam", OptimizerMethod::Adam}}, "optimizer");
        cfg.optimizer.learning_rate = learning_rate;
        cfg.optimizer.regularization = regularization;
        cfg.optimizer.mode = pick<MetricMode>(
            metric_mode, {{"factorL", MetricMode::FactorL}, {"directM", MetricMode::DirectM}}, "metric mode");
        cfg.optimizer.enforce_eta_bound = enforce_eta_bound;
        cfg.metric_init =
            pick<MetricInit>(metric_init, {{"identity", MetricInit::Identity}, {"random", MetricInit::Random}}, "metric init");
        cfg.init_sigma = init_sigma;
        cfg.recompute_neighbors = pick<NeighborRefresh>(
            recompute_neighbors, {{"never", NeighborRefresh::Never}, {"every-epoch", NeighborRefresh::EveryEpoch}},
            "neighbor refresh");
        cfg.gram_reg = gram_reg;
        cfg.null_tol = null_tol;
        cfg.early_stop = early_stop;
        cfg.seed = seed;
        cfg.initial_metric = std::move(initial_metric);
        py::gil_scoped_release release;
        return fit_alle(as_data(x), cfg);
      },
      py::arg("x"), py::arg("n_neighbors") = 10, py::arg("n_components") = 2, py::arg("max_epochs") = 50,
      py::arg("optimizer") = "sgd", py::arg("learning_rate") = 1e-3, py::arg("regularization") = 0.0,
      py::arg("metric_init") = "identity", py::arg("init_sigma") = 0.1, py::arg("metric_mode") = "factorL",
      py::arg("recompute_neighbors") = "never", py::arg("gram_reg") = PipelineConfig{}.gram_reg,
      py::arg("null_tol") = py::none(), py::arg("early_stop") = true, py::arg("enforce_eta_bound") = true,
      py::arg("seed") = 0, py::arg("initial_metric") = py::none());

  m.def(
      "knn",
      [](const RowMatrix& x, Index k, std::optional<Matrix> metric) {
        const MetricState state = metric ? state_from_metric(*metric) : init_identity(x.cols());
        const NeighborIndex nb = knn(x, k, state);
        using IdMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        IdMatrix ids = Eigen::Map<const IdMatrix>(nb.ids.data(), nb.size(), k);
        RowMatrix dist = Eigen::Map<const RowMatrix>(nb.distances.data(), nb.size(), k);
        return py::make_tuple(ids, dist);
      },
      py::arg("x"), py::arg("k"), py::arg("metric") = py::none(),
      "Exact K nearest neighbors (ids, distances) under the metric M (identity by default).");

  m.def(
      "mahalanobis_distance",
      [](const Vector& x, const Vector& y, const Matrix& metric) {
        return mahalanobis_distance(x, y, state_from_metric(metric));
      },
      py::arg("x"), py::arg("y"), py::arg("metric"));

  m.def(
      "learning_rate_bound", [](const RowMatrix& residuals) { return learning_rate_bound(residuals); },
      py::arg("residuals"));

  m.def("trustworthiness", &trustworthiness, py::arg("original"), py::arg("embedded"), py::arg("k"));
  m.def("continuity", &continuity, py::arg("original"), py::arg("embedded"), py::arg("k"));
  m.def(
      "silhouette", [](const RowMatrix& points, const std::vector<int>& labels) { return silhouette(points, labels); },
      py::arg("points"), py::arg("labels"));
  m.def(
      "knn_accuracy",
      [](const RowMatrix& points, const std::vector<int>& labels, Index k_classify, double test_fraction,
         std::uint64_t seed, const std::string& split) {
        return knn_accuracy(points, labels, k_classify, make_split_config(split, test_fraction, seed));
      },
      py::arg("points"), py::arg("labels"), py::arg("k_classify") = 5, py::arg("test_fraction") = 0.25,
      py::arg("seed") = 0, py::arg("split") = "stratified");
  m.def(
      "linear_accuracy",
      [](const RowMatrix& points, const std::vector<int>& labels, double test_fraction, std::uint64_t seed,
         const std::string& split) {
        return linear_accuracy(points, labels, make_split_config(split, test_fraction, seed));
      },
      py::arg("points"), py::arg("labels"), py::arg("test_fraction") = 0.25, py::arg("seed") = 0,
      py::arg("split") = "stratified");
}
