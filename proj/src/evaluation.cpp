#include "alle/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "alle/error.hpp"

namespace alle {

namespace {

void check_pair(const RowMatrix& original, const RowMatrix& embedded, Index k) {
  const Index n = original.rows();
  if (embedded.rows() != n) {
    throw ConfigError("original has " + std::to_string(n) + " rows but embedding has " +
                      std::to_string(embedded.rows()));
  }
  if (n < 2) throw ConfigError("need at least two points");
  if (k < 1 || 2 * n - 3 * k - 1 <= 0) {
    throw ConfigError("k = " + std::to_string(k) + " violates 1 <= k < (2n - 1) / 3 for n = " +
                      std::to_string(n));
  }
}

double neighborhood_penalty(const RankTable& membership, const RankTable& penalty, Index k) {
  const Index n = membership.n;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto in_membership = membership.rank(i, j) <= k;
      const auto in_penalty = penalty.rank(i, j) <= k;
      if (in_membership && !in_penalty) total += static_cast<double>(penalty.rank(i, j) - k);
    }
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * total;
}

// Dense class ids 0..C-1 in ascending label order.
std::vector<int> dense_classes(std::span<const int> labels, std::vector<int>& class_labels) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  class_labels.clear();
  for (auto& [label, id] : ids) {
    id = static_cast<int>(class_labels.size());
    class_labels.push_back(label);
  }
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

void check_labels(const RowMatrix& points, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != points.rows()) {
    throw ConfigError("label count does not match point count");
  }
}

}  // namespace

RankTable rank_table(const RowMatrix& points) {
  const Index n = points.rows();
  if (n < 2) throw ConfigError("rank table needs at least two points");
  RankTable table;
  table.n = n;
  table.ranks.assign(static_cast<std::size_t>(n * n), 0);
  std::vector<std::pair<double, Index>> order(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) order[c++] = {(points.row(i) - points.row(j)).squaredNorm(), j};
    }
    std::sort(order.begin(), order.end());
    for (std::size_t r = 0; r < order.size(); ++r) {
      table.ranks[static_cast<std::size_t>(i * n + order[r].second)] = static_cast<std::int32_t>(r + 1);
    }
  }
  return table;
}

double trustworthiness(const RowMatrix& original, const RowMatrix& embedded, Index k) {
  check_pair(original, embedded, k);
  return neighborhood_penalty(rank_table(embedded), rank_table(original), k);
}

double continuity(const RowMatrix& original, const RowMatrix& embedded, Index k) {
  check_pair(original, embedded, k);
  return neighborhood_penalty(rank_table(original), rank_table(embedded), k);
}

double silhouette(const RowMatrix& points, std::span<const int> labels) {
  check_labels(points, labels);
  std::vector<int> class_labels;
  const auto cls = dense_classes(labels, class_labels);
  const auto n_classes = class_labels.size();
  if (n_classes < 2) throw ConfigError("silhouette needs at least two clusters");

  const Index n = points.rows();
  std::vector<Index> sizes(n_classes, 0);
  for (int c : cls) ++sizes[static_cast<std::size_t>(c)];

  double total = 0.0;
  std::vector<double> sums(n_classes);
  for (Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(cls[static_cast<std::size_t>(j)])] +=
          (points.row(i) - points.row(j)).norm();
    }
    const auto own = static_cast<std::size_t>(cls[static_cast<std::size_t>(i)]);
    if (sizes[own] == 1) continue;  // singleton cluster scores 0
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::string Split::describe() const {
  std::ostringstream out;
  if (kind == SplitKind::TrainEqualsTest) {
    out << "train=test (leave-one-out)";
  } else {
    out << "stratified " << (1.0 - test_fraction) * 100.0 << "/" << test_fraction * 100.0
        << " seed " << seed;
  }
  return out.str();
}

SplitIndices make_split(std::span<const int> labels, const Split& split) {
  const auto n = static_cast<Index>(labels.size());
  SplitIndices out;
  if (split.kind == SplitKind::TrainEqualsTest) {
    out.train.resize(static_cast<std::size_t>(n));
    std::iota(out.train.begin(), out.train.end(), Index{0});
    out.test = out.train;
    return out;
  }
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  std::map<int, std::vector<Index>> by_class;
  for (Index i = 0; i < n; ++i) by_class[labels[static_cast<std::size_t>(i)]].push_back(i);

  std::mt19937_64 rng(split.seed);
  for (auto& [label, members] : by_class) {
    if (members.size() < 2) {
      throw ConfigError("class " + std::to_string(label) + " has " +
                        std::to_string(members.size()) + " sample(s); a stratified split needs 2");
    }
    std::shuffle(members.begin(), members.end(), rng);
    auto n_test = static_cast<std::size_t>(std::lround(split.test_fraction * static_cast<double>(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double knn_accuracy(const RowMatrix& points, std::span<const int> labels, Index k_classify,
                    const Split& split) {
  check_labels(points, labels);
  if (k_classify < 1) throw ConfigError("k_classify must be >= 1");
  const auto parts = make_split(labels, split);
  const bool exclude_self = split.kind == SplitKind::TrainEqualsTest;
  const auto available = static_cast<Index>(parts.train.size()) - (exclude_self ? 1 : 0);
  if (k_classify > available) throw ConfigError("k_classify exceeds the training set size");

  std::vector<std::pair<double, Index>> candidates;
  std::map<int, int> votes;
  Index correct = 0;
  for (Index q : parts.test) {
    candidates.clear();
    for (Index t : parts.train) {
      if (exclude_self && t == q) continue;
      candidates.emplace_back((points.row(q) - points.row(t)).squaredNorm(), t);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + k_classify, candidates.end());
    votes.clear();
    for (Index r = 0; r < k_classify; ++r) {
      ++votes[labels[static_cast<std::size_t>(candidates[static_cast<std::size_t>(r)].second)]];
    }
    // std::map iterates labels in ascending order, so max_element keeps the smallest on ties.
    const auto best = std::max_element(votes.begin(), votes.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    if (best->first == labels[static_cast<std::size_t>(q)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(parts.test.size());
}

namespace {

constexpr double kLogisticPenalty = 1e-4;
constexpr double kLogisticTolerance = 1e-6;
constexpr int kLogisticMaxIterations = 200;

struct SoftmaxModel {
  Index n_classes = 0;
  Index n_features = 0;  // including the bias column
  Vector params;         // class-major: params[c * n_features + f]

  Vector probabilities(const Eigen::Ref<const Vector>& x) const {
    Vector scores(n_classes);
    for (Index c = 0; c < n_classes; ++c) scores(c) = params.segment(c * n_features, n_features).dot(x);
    scores.array() -= scores.maxCoeff();
    scores = scores.array().exp();
    return scores / scores.sum();
  }
};

double softmax_objective(const SoftmaxModel& model, const Matrix& design, const std::vector<int>& y) {
  double loss = 0.0;
  for (Index i = 0; i < design.rows(); ++i) {
    const Vector p = model.probabilities(design.row(i).transpose());
    loss -= std::log(std::max(p(y[static_cast<std::size_t>(i)]), 1e-300));
  }
  return loss / static_cast<double>(design.rows()) + 0.5 * kLogisticPenalty * model.params.squaredNorm();
}

// Damped Newton on the L2-penalized multinomial log-loss.
SoftmaxModel fit_softmax(const Matrix& design, const std::vector<int>& y, Index n_classes) {
  SoftmaxModel model;
  model.n_classes = n_classes;
  model.n_features = design.cols();
  const Index dim = n_classes * model.n_features;
  model.params = Vector::Zero(dim);
  const double inv_n = 1.0 / static_cast<double>(design.rows());

  double objective = softmax_objective(model, design, y);
  for (int iter = 0; iter < kLogisticMaxIterations; ++iter) {
    Vector grad = kLogisticPenalty * model.params;
    Matrix hess = kLogisticPenalty * Matrix::Identity(dim, dim);
    for (Index i = 0; i < design.rows(); ++i) {
      const Vector x = design.row(i).transpose();
      const Vector p = model.probabilities(x);
      const Matrix xx = inv_n * x * x.transpose();
      for (Index a = 0; a < n_classes; ++a) {
        const double residual = p(a) - (y[static_cast<std::size_t>(i)] == a ? 1.0 : 0.0);
        grad.segment(a * model.n_features, model.n_features) += inv_n * residual * x;
        for (Index b = 0; b < n_classes; ++b) {
          const double w = (a == b ? p(a) : 0.0) - p(a) * p(b);
          hess.block(a * model.n_features, b * model.n_features, model.n_features, model.n_features) += w * xx;
        }
      }
    }
    if (grad.lpNorm<Eigen::Infinity>() < kLogisticTolerance) break;

    const Vector direction = -hess.ldlt().solve(grad);
    double step = 1.0;
    SoftmaxModel trial = model;
    double trial_objective = objective;
    for (int ls = 0; ls < 50; ++ls) {
      trial.params = model.params + step * direction;
      trial_objective = softmax_objective(trial, design, y);
      if (trial_objective <= objective + 1e-4 * step * grad.dot(direction)) break;
      step *= 0.5;
    }
    if (!(trial_objective < objective)) break;
    model = std::move(trial);
    objective = trial_objective;
  }
  return model;
}

}  // namespace

double linear_accuracy(const RowMatrix& points, std::span<const int> labels, const Split& split) {
  check_labels(points, labels);
  std::vector<int> class_labels;
  const auto cls = dense_classes(labels, class_labels);
  if (class_labels.size() < 2) throw ConfigError("classification needs at least two classes");
  const auto parts = make_split(labels, split);

  const Index p = points.cols();
  Vector mean = Vector::Zero(p);
  for (Index t : parts.train) mean += points.row(t).transpose();
  mean /= static_cast<double>(parts.train.size());
  Vector scale = Vector::Zero(p);
  for (Index t : parts.train) scale += (points.row(t).transpose() - mean).cwiseAbs2();
  scale = (scale / static_cast<double>(parts.train.size())).cwiseSqrt();

  const auto design_row = [&](Index i) {
    Vector x(p + 1);
    for (Index f = 0; f < p; ++f) {
      x(f) = scale(f) > 1e-12 * std::max(1.0, std::abs(mean(f))) ? (points(i, f) - mean(f)) / scale(f) : 0.0;
    }
    x(p) = 1.0;
    return x;
  };

  Matrix design(static_cast<Index>(parts.train.size()), p + 1);
  std::vector<int> y;
  for (std::size_t r = 0; r < parts.train.size(); ++r) {
    design.row(static_cast<Index>(r)) = design_row(parts.train[r]).transpose();
    y.push_back(cls[static_cast<std::size_t>(parts.train[r])]);
  }
  const auto model = fit_softmax(design, y, static_cast<Index>(class_labels.size()));

  Index correct = 0;
  for (Index q : parts.test) {
    Index predicted = 0;
    model.probabilities(design_row(q)).maxCoeff(&predicted);
    if (predicted == cls[static_cast<std::size_t>(q)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(parts.test.size());
}

QualityReport evaluate_embedding(const RowMatrix& original, const RowMatrix& embedded, Index k,
                                 const std::optional<std::vector<int>>& labels, Index k_classify,
                                 const Split& split) {
  QualityReport report;
  report.k = k;
  report.trustworthiness = trustworthiness(original, embedded, k);
  report.continuity = continuity(original, embedded, k);
  if (labels) {
    report.silhouette = silhouette(embedded, *labels);
    report.knn_accuracy = knn_accuracy(embedded, *labels, k_classify, split);
    report.linear_accuracy = linear_accuracy(embedded, *labels, split);
    report.split = split.describe();
  }
  return report;
}

}  // namespace alle
