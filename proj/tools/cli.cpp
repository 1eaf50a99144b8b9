#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include "alle/alle.hpp"
#include "json_config.hpp"

namespace alle::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

// Manifest bookkeeping shared by every subcommand.
struct Manifest {
  ordered_json config = ordered_json::object();
  ordered_json inputs = ordered_json::array();
  std::vector<std::string> outputs;

  void add_input(const fs::path& path) {
    inputs.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
  }
};

// dataset -----------------------------------------------------------------

struct DatasetArgs {
  std::string kind;
  Index n = 1000;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> factors{1.0, 1.0, 10.0};
  std::string output;
};

void setup_dataset(CLI::App& app, DatasetArgs& a) {
  auto* sub = app.add_subcommand("dataset", "Generate or export a built-in dataset as CSV");
  sub->add_option("kind", a.kind, "swiss-roll | scaled-swiss-roll | iris")
      ->required()
      ->check(CLI::IsMember({"swiss-roll", "scaled-swiss-roll", "iris"}));
  sub->add_option("--n", a.n, "Number of samples (swiss rolls)")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--noise", a.noise, "Gaussian noise scale")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  sub->add_option("--factors", a.factors, "Per-column scale factors (scaled-swiss-roll)")
      ->capture_default_str()
      ->delimiter(',');
  sub->add_option("--output", a.output, "Output CSV path")->required();
}

int run_dataset(const DatasetArgs& a, Manifest& m) {
  DataMatrix data;
  if (a.kind == "iris") {
    data = builtin_iris();
  } else {
    data = generate_swiss_roll(a.n, a.noise, a.seed);
    if (a.kind == "scaled-swiss-roll") data = scale_features(data, a.factors);
  }
  m.config = {{"kind", a.kind}, {"output", a.output}};
  if (a.kind != "iris") {
    m.config["n"] = a.n;
    m.config["noise"] = a.noise;
    m.config["seed"] = a.seed;
  }
  if (a.kind == "scaled-swiss-roll") m.config["factors"] = a.factors;
  write_csv(fs::path(a.output), data);
  m.outputs.push_back(a.output);
  return kOk;
}

// fit ---------------------------------------------------------------------

struct FitArgs {
  std::string input;
  bool no_header = false;
  std::optional<Index> label_column;
  std::string input_idx;
  std::string input_idx_labels;
  std::optional<Index> subsample;
  std::vector<int> classes;
  bool stratified = false;
  std::string algorithm = "alle";
  Index neighbors = 10;
  Index components = 2;
  Index epochs = 50;
  std::string optimizer = "sgd";
  double lr = 1e-3;
  double lambda = 0.0;
  std::string metric_init = "identity";
  double sigma = 0.1;
  std::string metric_mode = "factorL";
  std::string recompute = "never";
  double gram_reg = PipelineConfig{}.gram_reg;
  std::optional<double> null_tol;
  bool no_early_stop = false;
  bool no_eta_clamp = false;
  std::uint64_t seed = 0;
  std::string metric_in;
  std::string metric_out;
  std::string trace_out;
  std::string output;
};

void setup_fit(CLI::App& app, FitArgs& a) {
  auto* sub = app.add_subcommand("fit", "Fit LLE or adaptive LLE and write the embedding");
  auto* input = sub->add_option("--input", a.input, "Input CSV")->check(CLI::ExistingFile);
  sub->add_flag("--no-header", a.no_header, "Input CSV has no header row");
  sub->add_option("--label-column", a.label_column, "Zero-based label column in the input CSV");
  auto* idx = sub->add_option("--input-idx", a.input_idx, "IDX image file")->check(CLI::ExistingFile);
  sub->add_option("--input-idx-labels", a.input_idx_labels, "IDX label file")->check(CLI::ExistingFile)->needs(idx);
  input->excludes(idx);
  sub->add_option("--subsample", a.subsample, "Keep this many rows (seeded by --seed)")->check(CLI::PositiveNumber);
  sub->add_option("--classes", a.classes, "Restrict to these labels before subsampling")->delimiter(',');
  sub->add_flag("--stratified", a.stratified, "Subsample proportionally per class");
  sub->add_option("--algorithm", a.algorithm, "lle | alle")->capture_default_str()->check(CLI::IsMember({"lle", "alle"}));
  sub->add_option("--neighbors", a.neighbors, "Neighbors per point (K)")->capture_default_str();
  sub->add_option("--components", a.components, "Embedding dimension (d)")->capture_default_str();
  sub->add_option("--epochs", a.epochs, "Metric-learning epochs")->capture_default_str();
  sub->add_option("--optimizer", a.optimizer, "sgd | adam")->capture_default_str()->check(CLI::IsMember({"sgd", "adam"}));
  sub->add_option("--lr", a.lr, "Learning rate")->capture_default_str();
  sub->add_option("--lambda", a.lambda, "Regularization added as +lambda L per step")->capture_default_str();
  sub->add_option("--metric-init", a.metric_init, "identity | random")
      ->capture_default_str()
      ->check(CLI::IsMember({"identity", "random"}));
  sub->add_option("--sigma", a.sigma, "Std. dev. of random factor entries")->capture_default_str();
  sub->add_option("--metric-mode", a.metric_mode, "factorL | directM")
      ->capture_default_str()
      ->check(CLI::IsMember({"factorL", "directM"}));
  sub->add_option("--recompute-neighbors", a.recompute, "never | every-epoch")
      ->capture_default_str()
      ->check(CLI::IsMember({"never", "every-epoch"}));
  sub->add_option("--gram-reg", a.gram_reg, "Gram regularization, scaled by trace(G)/K")->capture_default_str();
  sub->add_option("--null-tol", a.null_tol, "Absolute threshold for null eigenvalues");
  sub->add_flag("--no-early-stop", a.no_early_stop, "Always run every epoch");
  sub->add_flag("--no-eta-clamp", a.no_eta_clamp, "Record but do not clamp rates above the stability bound");
  sub->add_option("--seed", a.seed, "Seed for subsampling and random metric init")->capture_default_str();
  sub->add_option("--metric-in", a.metric_in, "Starting metric factor L (CSV)")->check(CLI::ExistingFile);
  sub->add_option("--metric-out", a.metric_out, "Write the learned factor L (CSV)");
  sub->add_option("--trace-out", a.trace_out, "Write the per-epoch error trace (CSV)");
  sub->add_option("--output", a.output, "Embedding CSV path")->required();
}

DataMatrix load_fit_input(const FitArgs& a, Manifest& m) {
  DataMatrix data;
  if (!a.input.empty()) {
    CsvOptions opts;
    opts.has_header = !a.no_header;
    opts.named_columns = !a.no_header;
    opts.label_column = a.label_column;
    data = load_csv(a.input, opts);
    m.add_input(a.input);
  } else if (!a.input_idx.empty()) {
    std::optional<fs::path> labels;
    if (!a.input_idx_labels.empty()) labels = a.input_idx_labels;
    data = load_idx(a.input_idx, labels);
    m.add_input(a.input_idx);
    if (labels) m.add_input(*labels);
  } else {
    throw ConfigError("one of --input or --input-idx is required");
  }

  std::optional<std::set<int>> classes;
  if (!a.classes.empty()) classes = std::set<int>(a.classes.begin(), a.classes.end());
  if (a.subsample) {
    data = a.stratified ? stratified_subsample(data, *a.subsample, classes, a.seed)
                        : subsample(data, *a.subsample, classes, a.seed);
  } else if (classes) {
    if (!data.labels) throw ConfigError("--classes needs labeled input");
    std::vector<Index> keep;
    for (Index i = 0; i < data.rows(); ++i) {
      if (classes->contains((*data.labels)[static_cast<std::size_t>(i)])) keep.push_back(i);
    }
    data = select_rows(data, keep);
  }
  return data;
}

PipelineConfig pipeline_config(const FitArgs& a) {
  PipelineConfig cfg;
  cfg.n_components = a.components;
  cfg.n_neighbors = a.neighbors;
  cfg.max_epochs = a.epochs;
  cfg.optimizer.method = a.optimizer == "adam" ? OptimizerMethod::Adam : OptimizerMethod::Sgd;
  cfg.optimizer.learning_rate = a.lr;
  cfg.optimizer.regularization = a.lambda;
  cfg.optimizer.mode = a.metric_mode == "directM" ? MetricMode::DirectM : MetricMode::FactorL;
  cfg.optimizer.enforce_eta_bound = !a.no_eta_clamp;
  cfg.metric_init = a.metric_init == "random" ? MetricInit::Random : MetricInit::Identity;
  cfg.init_sigma = a.sigma;
  cfg.recompute_neighbors = a.recompute == "every-epoch" ? NeighborRefresh::EveryEpoch : NeighborRefresh::Never;
  cfg.gram_reg = a.gram_reg;
  cfg.null_tol = a.null_tol;
  cfg.early_stop = !a.no_early_stop;
  cfg.seed = a.seed;
  if (!a.metric_in.empty()) cfg.initial_metric = read_metric_csv(a.metric_in).metric();
  return cfg;
}

ordered_json echo_config(const FitArgs& a, const PipelineConfig& cfg, Index n, Index dim) {
  ordered_json j;
  j["algorithm"] = a.algorithm;
  j["n"] = n;
  j["dim"] = dim;
  j["neighbors"] = cfg.n_neighbors;
  j["components"] = cfg.n_components;
  if (a.algorithm == "alle") {
    j["epochs"] = cfg.max_epochs;
    j["optimizer"] = a.optimizer;
    j["lr"] = cfg.optimizer.learning_rate;
    j["lambda"] = cfg.optimizer.regularization;
    j["adam"] = {{"beta1", cfg.optimizer.beta1}, {"beta2", cfg.optimizer.beta2}, {"epsilon", cfg.optimizer.epsilon}};
    j["metric_init"] = a.metric_init;
    if (cfg.metric_init == MetricInit::Random) j["sigma"] = cfg.init_sigma;
    j["metric_mode"] = a.metric_mode;
    j["recompute_neighbors"] = a.recompute;
    j["eta_clamp"] = cfg.optimizer.enforce_eta_bound;
    j["early_stop"] = cfg.early_stop;
    if (!a.metric_in.empty()) j["metric_in"] = a.metric_in;
  }
  j["gram_reg"] = cfg.gram_reg;
  if (cfg.null_tol) j["null_tol"] = *cfg.null_tol;
  j["seed"] = cfg.seed;
  if (a.subsample) {
    j["subsample"] = *a.subsample;
    j["stratified"] = a.stratified;
  }
  if (!a.classes.empty()) j["classes"] = a.classes;
  return j;
}

void write_trace(const fs::path& path, const std::vector<EpochRecord>& epochs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,E,learning_rate,bound,clamped\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << format_double(e.error) << ',' << format_double(e.learning_rate) << ','
        << format_double(e.bound) << ',' << (e.clamped ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

int run_fit(const FitArgs& a, Manifest& m, std::ostream& err) {
  const DataMatrix data = load_fit_input(a, m);
  const PipelineConfig cfg = pipeline_config(a);
  m.config = echo_config(a, cfg, data.rows(), data.dims());

  const FitResult fit = a.algorithm == "lle" ? fit_lle(data, cfg) : fit_alle(data, cfg);
  if (fit.embedding.eta_guard) {
    err << "warning: learning rate exceeded the stability bound in at least one epoch"
        << (cfg.optimizer.enforce_eta_bound ? " and was clamped" : "") << "\n";
  }

  DataMatrix embedding;
  embedding.values = fit.embedding.coordinates;
  embedding.labels = data.labels;
  embedding.color = data.color;
  for (Index c = 0; c < embedding.dims(); ++c) embedding.feature_names.push_back("y" + std::to_string(c));

  // Everything is computed before the first file is written.
  write_csv(fs::path(a.output), embedding);
  m.outputs.push_back(a.output);
  if (!a.metric_out.empty()) {
    write_metric_csv(a.metric_out, fit.metric);
    m.outputs.push_back(a.metric_out);
  }
  if (!a.trace_out.empty()) {
    write_trace(a.trace_out, fit.epochs);
    m.outputs.push_back(a.trace_out);
  }
  if (!fit.epochs.empty()) {
    m.config["epochs_completed"] = fit.epochs.size();
    m.config["final_error"] = fit.epochs.back().error;
  }
  m.config["eta_guard"] = fit.embedding.eta_guard;
  return kOk;
}

// evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string original;
  std::string embedding;
  Index k = 0;
  std::string labels;
  Index classify_k = 5;
  double test_fraction = 0.25;
  std::string split = "stratified";
  std::uint64_t seed = 0;
  bool no_header = false;
  std::string output;
};

void setup_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* sub = app.add_subcommand("evaluate", "Score an embedding against the original data");
  sub->add_option("--original", a.original, "Original data CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--embedding", a.embedding, "Embedding CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--k", a.k, "Neighborhood size for trustworthiness and continuity")->required();
  sub->add_option("--labels", a.labels, "CSV with a 'label' column (or a single column of labels)")
      ->check(CLI::ExistingFile);
  sub->add_option("--classify-k", a.classify_k, "Neighbors for the kNN classifier")->capture_default_str();
  sub->add_option("--test-fraction", a.test_fraction, "Held-out fraction per class")->capture_default_str();
  sub->add_option("--split", a.split, "stratified | train-equals-test")
      ->capture_default_str()
      ->check(CLI::IsMember({"stratified", "train-equals-test"}));
  sub->add_option("--seed", a.seed, "Split seed")->capture_default_str();
  sub->add_flag("--no-header", a.no_header, "CSV inputs have no header row");
  sub->add_option("--output", a.output, "Report JSON path")->required();
}

std::vector<int> read_labels(const fs::path& path, bool no_header) {
  CsvOptions opts;
  opts.has_header = !no_header;
  opts.named_columns = !no_header;
  const DataMatrix table = load_csv(path, opts);
  if (table.labels) return *table.labels;
  if (table.dims() != 1) throw FormatError(path.string() + ": expected a 'label' column or a single column");
  std::vector<int> labels;
  for (Index i = 0; i < table.rows(); ++i) {
    const double v = table.values(i, 0);
    if (v != std::floor(v) || v < 0) throw FormatError(path.string() + ": labels must be non-negative integers");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

int run_evaluate(const EvaluateArgs& a, Manifest& m) {
  CsvOptions opts;
  opts.has_header = !a.no_header;
  opts.named_columns = !a.no_header;
  const DataMatrix original = load_csv(a.original, opts);
  const DataMatrix embedded = load_csv(a.embedding, opts);
  m.add_input(a.original);
  m.add_input(a.embedding);

  std::optional<std::vector<int>> labels;
  if (!a.labels.empty()) {
    labels = read_labels(a.labels, a.no_header);
    m.add_input(a.labels);
    if (static_cast<Index>(labels->size()) != original.rows()) {
      throw ConfigError("label count " + std::to_string(labels->size()) + " does not match " +
                        std::to_string(original.rows()) + " rows");
    }
  }

  const Split split{a.split == "train-equals-test" ? SplitKind::TrainEqualsTest : SplitKind::Stratified,
                    a.test_fraction, a.seed};
  const QualityReport q = evaluate_embedding(original.values, embedded.values, a.k, labels, a.classify_k, split);

  ordered_json echo;
  echo["original"] = a.original;
  echo["embedding"] = a.embedding;
  echo["k"] = a.k;
  if (labels) {
    echo["labels"] = a.labels;
    echo["classify_k"] = a.classify_k;
    echo["split"] = a.split;
    echo["test_fraction"] = a.test_fraction;
    echo["seed"] = a.seed;
  }

  ordered_json report;
  report["trustworthiness"] = q.trustworthiness;
  report["continuity"] = q.continuity;
  report["k"] = q.k;
  if (q.silhouette) report["silhouette"] = *q.silhouette;
  if (q.knn_accuracy) report["knn_accuracy"] = *q.knn_accuracy;
  if (q.linear_accuracy) report["linear_accuracy"] = *q.linear_accuracy;
  if (q.split) report["split"] = *q.split;
  report["config_echo"] = echo;

  std::ofstream out(a.output);
  if (!out) throw IoError("cannot open " + a.output + " for writing");
  out << report.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + a.output);
  m.config = echo;
  m.outputs.push_back(a.output);
  return kOk;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Locally linear embedding with a learned Mahalanobis metric", "alle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ALLE_VERSION);
  app.fallthrough();
  app.set_config("--config", "", "JSON file of flag values; command-line flags take precedence");

  // Flat config keys belong to whichever subcommand is being run.
  std::string section;
  for (const auto& arg : args) {
    if (arg == "dataset" || arg == "fit" || arg == "evaluate") {
      section = arg;
      break;
    }
  }
  app.config_formatter(std::make_shared<JsonConfig>(section));

  DatasetArgs dataset_args;
  FitArgs fit_args;
  EvaluateArgs evaluate_args;
  setup_dataset(app, dataset_args);
  setup_fit(app, fit_args);
  setup_evaluate(app, evaluate_args);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  const auto start = std::chrono::steady_clock::now();
  Manifest manifest;
  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub->get_name() == "dataset") {
      run_dataset(dataset_args, manifest);
    } else if (sub->get_name() == "fit") {
      run_fit(fit_args, manifest, err);
    } else {
      run_evaluate(evaluate_args, manifest);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json m;
  m["command"] = sub->get_name();
  m["args"] = args;
  m["config"] = manifest.config;
  m["inputs"] = manifest.inputs;
  m["outputs"] = manifest.outputs;
  m["wall_time_seconds"] = seconds;
  m["version"] = ALLE_VERSION;
  out << m.dump(2) << '\n';
  return kOk;
}

}  // namespace alle::cli
