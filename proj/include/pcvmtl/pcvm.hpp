#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace pcvmtl {

/// Standard normal CDF.
inline double probit(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// pdf(z) / cdf(z), stable far into the lower tail.
inline double inverse_mills(double z) {
  if (z > -35.0) return normal_pdf(z) / probit(z);
  const double t = -z;
  return t + 1.0 / t - 2.0 / (t * t * t);
}

/// Decision values are clamped to this magnitude before the probit link.
inline constexpr double kDecisionClamp = 8.0;

struct TrainConfig {
  int max_iterations = 500;
  double weight_prune_threshold = 1e-3;
  double convergence_tolerance = 1e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iterations < 1) throw InputError("TrainConfig: max_iterations must be >= 1");
    if (!(weight_prune_threshold > 0.0) || !(convergence_tolerance > 0.0)) {
      throw InputError("TrainConfig: thresholds must be positive");
    }
  }
};

/// Maps the internal {-1, +1} classes to external class ids.
struct LabelMap {
  int negative = -1;
  int positive = 1;

  int to_external(int internal) const { return internal >= 0 ? positive : negative; }
  int to_internal(int external) const {
    if (external == positive) return 1;
    if (external == negative) return -1;
    throw InputError("label " + std::to_string(external) + " is not in the binary label map");
  }
};

/// Sparse probit kernel classifier. Only basis functions that survived
/// pruning are stored; `retained_indices` point into the training set in
/// ascending order.
struct PcvmModel {
  VectorXd weights;
  double bias = 0.0;
  std::vector<Index> retained_indices;
  KernelSpec kernel;
  /// Retained training samples, one per row. Empty when the model was trained
  /// from a precomputed kernel.
  MatrixXd basis_points;
  LabelMap label_map;
  Index training_size = 0;
  int iterations = 0;
  /// Basis count after each EM iteration (first entry is the initial count).
  std::vector<Index> basis_trace;

  Index size() const { return static_cast<Index>(retained_indices.size()); }
};

namespace detail {

inline void check_binary_labels(const std::vector<int>& y) {
  bool pos = false;
  bool neg = false;
  for (int v : y) {
    if (v == 1) {
      pos = true;
    } else if (v == -1) {
      neg = true;
    } else {
      throw InputError("pcvm_train: internal labels must be -1 or +1, got " + std::to_string(v));
    }
  }
  if (!(pos && neg)) throw InputError("pcvm_train: single-class input");
}

}  // namespace detail

/// EM training of the probabilistic classification vector machine.
///
/// `k` is the n x n training kernel: row i holds the basis responses of
/// sample i. Weights carry truncated Gaussian priors whose sign follows the
/// label of their basis sample. The E-step takes the expectation of the
/// latent probit targets (truncated normal mean) and of the prior precisions
/// (1 / w_i^2); the M-step solves the resulting ridge system in the scaled
/// form w = M (M K'K M + I)^-1 M K'(h - b) with M = diag(sqrt(2) |w|), which
/// stays well conditioned as weights shrink. The bias has a flat prior.
///
/// Weights that change sign or fall below the prune threshold are removed
/// and never revived.
inline PcvmModel pcvm_train(const MatrixXd& k, const std::vector<int>& labels,
                            const TrainConfig& cfg = {}) {
  cfg.validate();
  if (k.rows() != k.cols()) {
    throw InputError("pcvm_train: kernel must be square, got " + std::to_string(k.rows()) + "x" +
                     std::to_string(k.cols()));
  }
  if (static_cast<Index>(labels.size()) != k.rows()) {
    throw InputError("pcvm_train: " + std::to_string(labels.size()) + " labels for kernel of size " +
                     std::to_string(k.rows()));
  }
  if (!k.allFinite()) throw InputError("pcvm_train: kernel has non-finite entries");
  detail::check_binary_labels(labels);

  const Index n = k.rows();
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];

  std::vector<Index> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), Index{0});
  VectorXd w = 0.1 * y;
  double b = 0.0;

  PcvmModel model;
  model.training_size = n;
  model.basis_trace.push_back(n);

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const auto l = static_cast<Index>(active.size());
    MatrixXd phi(n, l);
    for (Index j = 0; j < l; ++j) phi.col(j) = k.col(active[static_cast<std::size_t>(j)]);

    // E-step: expected latent targets under the probit likelihood.
    const VectorXd f = (phi * w).array() + b;
    VectorXd h(n);
    for (Index i = 0; i < n; ++i) h(i) = f(i) + y(i) * inverse_mills(y(i) * f(i));

    // M-step.
    VectorXd w_new = VectorXd::Zero(l);
    if (l > 0) {
      const VectorXd scale = std::numbers::sqrt2 * w.cwiseAbs();
      MatrixXd system = scale.asDiagonal() * (phi.transpose() * phi) * scale.asDiagonal();
      system.diagonal().array() += 1.0;
      const VectorXd rhs = scale.asDiagonal() * (phi.transpose() * (h.array() - b).matrix());
      w_new = scale.asDiagonal() * system.llt().solve(rhs);
    }
    const double b_new = (h - phi * w_new).mean();
    if (!w_new.allFinite() || !std::isfinite(b_new)) {
      throw NumericalError("pcvm_train", "non-finite weights at iteration " + std::to_string(iter));
    }

    const double change = (w_new - w).norm() / std::max(w.norm(), 1e-300);

    std::vector<Index> next_active;
    std::vector<double> next_w;
    for (Index j = 0; j < l; ++j) {
      const Index idx = active[static_cast<std::size_t>(j)];
      const double wj = w_new(j);
      if (y(idx) * wj > 0.0 && std::abs(wj) >= cfg.weight_prune_threshold) {
        next_active.push_back(idx);
        next_w.push_back(wj);
      }
    }
    active = std::move(next_active);
    w = Eigen::Map<const VectorXd>(next_w.data(), static_cast<Index>(next_w.size()));
    b = b_new;
    model.iterations = iter + 1;
    model.basis_trace.push_back(static_cast<Index>(active.size()));
    if (change < cfg.convergence_tolerance) break;
  }

  model.weights = w;
  model.bias = b;
  model.retained_indices = std::move(active);
  return model;
}

/// Decision values K_lm' w + b for a kernel whose rows follow the retained
/// basis order.
inline VectorXd decision_values(const PcvmModel& model, const MatrixXd& k_basis_test) {
  if (k_basis_test.rows() != model.size()) {
    throw InputError("pcvm_predict: kernel has " + std::to_string(k_basis_test.rows()) +
                     " rows, model retains " + std::to_string(model.size()) + " basis functions");
  }
  VectorXd out(k_basis_test.cols());
  for (Index j = 0; j < k_basis_test.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < model.size(); ++i) acc += model.weights(i) * k_basis_test(i, j);
    out(j) = acc + model.bias;
  }
  return out;
}

/// Decision values through the full n-row training kernel; pruned basis
/// functions contribute zero weight.
inline VectorXd decision_values_full(const PcvmModel& model, const MatrixXd& k_train_test) {
  if (k_train_test.rows() != model.training_size) {
    throw InputError("pcvm_predict: full kernel has " + std::to_string(k_train_test.rows()) +
                     " rows, expected " + std::to_string(model.training_size));
  }
  VectorXd full = VectorXd::Zero(model.training_size);
  for (Index i = 0; i < model.size(); ++i) {
    full(model.retained_indices[static_cast<std::size_t>(i)]) = model.weights(i);
  }
  VectorXd out(k_train_test.cols());
  for (Index j = 0; j < k_train_test.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < model.training_size; ++i) acc += full(i) * k_train_test(i, j);
    out(j) = acc + model.bias;
  }
  return out;
}

struct Prediction {
  std::vector<int> labels;  // internal -1 / +1
  VectorXd probabilities;   // P(y = +1)
  VectorXd decision;
};

inline Prediction predict_from_decision(const VectorXd& decision) {
  Prediction out;
  out.decision = decision;
  out.probabilities.resize(decision.size());
  out.labels.resize(static_cast<std::size_t>(decision.size()));
  for (Index j = 0; j < decision.size(); ++j) {
    const double clamped = std::clamp(decision(j), -kDecisionClamp, kDecisionClamp);
    out.probabilities(j) = probit(clamped);
    out.labels[static_cast<std::size_t>(j)] = decision(j) >= 0.0 ? 1 : -1;
  }
  return out;
}

/// Prediction from a kernel whose rows are the retained basis functions.
inline Prediction pcvm_predict(const PcvmModel& model, const MatrixXd& k_basis_test) {
  return predict_from_decision(decision_values(model, k_basis_test));
}

/// Rows of `k_train_test` restricted to the retained basis.
inline MatrixXd retained_rows(const PcvmModel& model, const MatrixXd& k_train_test) {
  MatrixXd out(model.size(), k_train_test.cols());
  for (Index i = 0; i < model.size(); ++i) {
    out.row(i) = k_train_test.row(model.retained_indices[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Binary classifier on a labeled dataset with arbitrary integer labels.
/// The smaller class id maps to -1.
inline PcvmModel pcvm_fit(const Dataset& train, const KernelSpec& spec, const TrainConfig& cfg = {}) {
  train.validate();
  const auto classes = train.label_set();
  if (classes.size() != 2) {
    throw InputError("pcvm_fit: expected exactly two classes, got " +
                     std::to_string(classes.size()));
  }
  LabelMap map{classes[0], classes[1]};
  std::vector<int> y;
  y.reserve(train.labels.size());
  for (int v : train.labels) y.push_back(map.to_internal(v));

  auto model = pcvm_train(gram(spec, train.features, train.features), y, cfg);
  model.kernel = spec;
  model.label_map = map;
  model.basis_points.resize(model.size(), train.d());
  for (Index i = 0; i < model.size(); ++i) {
    model.basis_points.row(i) = train.features.row(model.retained_indices[static_cast<std::size_t>(i)]);
  }
  return model;
}

/// Prediction on raw feature rows through the stored basis points. Labels are
/// external class ids.
struct LabeledPrediction {
  std::vector<int> labels;
  VectorXd probabilities;
};

inline LabeledPrediction pcvm_predict(const PcvmModel& model, const Dataset& test) {
  if (model.basis_points.rows() != model.size()) {
    throw InputError("pcvm_predict: model has no stored basis points");
  }
  MatrixXd k = model.size() > 0 ? gram(model.kernel, model.basis_points, test.features)
                                : MatrixXd(0, test.n());
  const auto raw = pcvm_predict(model, k);
  LabeledPrediction out;
  out.probabilities = raw.probabilities;
  for (int v : raw.labels) out.labels.push_back(model.label_map.to_external(v));
  return out;
}

/// Binary PCVM or a one-vs-rest ensemble over a shared training kernel.
struct Classifier {
  std::vector<int> classes;
  /// One model when binary; otherwise one per class (class vs rest).
  std::vector<PcvmModel> models;

  bool binary() const { return models.size() == 1; }

  /// Distinct training samples referenced by any model.
  std::vector<Index> model_vectors() const {
    std::set<Index> all;
    for (const auto& m : models) all.insert(m.retained_indices.begin(), m.retained_indices.end());
    return {all.begin(), all.end()};
  }
};

/// Supplies kernel rows (training basis samples x test points) for the given
/// training indices.
using KernelRows = std::function<MatrixXd(const std::vector<Index>&)>;

inline Classifier binary_classifier(const MatrixXd& k, const std::vector<int>& labels,
                                    const std::vector<int>& classes, const TrainConfig& cfg) {
  LabelMap map{classes[0], classes[1]};
  std::vector<int> y;
  y.reserve(labels.size());
  for (int v : labels) y.push_back(map.to_internal(v));
  auto model = pcvm_train(k, y, cfg);
  model.label_map = map;
  return {classes, {std::move(model)}};
}

/// One binary model per class (class vs rest). With exactly two classes this
/// reduces to the plain binary classifier. `classes` declares the label set;
/// every declared class must occur in `labels`.
inline Classifier one_vs_rest_train(const MatrixXd& k, const std::vector<int>& labels,
                                    std::vector<int> classes, const TrainConfig& cfg = {}) {
  const std::set<int> present(labels.begin(), labels.end());
  if (classes.empty()) classes.assign(present.begin(), present.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InputError("one_vs_rest_train: single-class input");
  for (int c : classes) {
    if (!present.contains(c)) {
      throw InputError("one_vs_rest_train: class " + std::to_string(c) + " absent from training data");
    }
  }
  for (int v : present) {
    if (!std::binary_search(classes.begin(), classes.end(), v)) {
      throw InputError("one_vs_rest_train: label " + std::to_string(v) + " not in declared classes");
    }
  }
  if (classes.size() == 2) return binary_classifier(k, labels, classes, cfg);

  Classifier out;
  out.classes = classes;
  for (int c : classes) {
    std::vector<int> y;
    y.reserve(labels.size());
    for (int v : labels) y.push_back(v == c ? 1 : -1);
    auto model = pcvm_train(k, y, cfg);
    model.label_map = LabelMap{-1, c};
    out.models.push_back(std::move(model));
  }
  return out;
}

inline Classifier train_classifier(const MatrixXd& k, const std::vector<int>& labels,
                                   const TrainConfig& cfg = {}) {
  return one_vs_rest_train(k, labels, {}, cfg);
}

/// External class predictions. One-vs-rest picks the largest decision value
/// (equivalently the largest probit output); ties go to the smaller class id.
inline std::vector<int> one_vs_rest_predict(const Classifier& clf, const KernelRows& rows) {
  if (clf.models.empty()) throw InputError("one_vs_rest_predict: empty classifier");
  if (clf.binary()) {
    const auto& m = clf.models.front();
    const auto pred = pcvm_predict(m, rows(m.retained_indices));
    std::vector<int> out;
    out.reserve(pred.labels.size());
    for (int v : pred.labels) out.push_back(m.label_map.to_external(v));
    return out;
  }
  std::vector<VectorXd> decisions;
  for (const auto& m : clf.models) decisions.push_back(decision_values(m, rows(m.retained_indices)));
  const Index count = decisions.front().size();
  std::vector<int> out(static_cast<std::size_t>(count));
  for (Index j = 0; j < count; ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < decisions.size(); ++c) {
      if (decisions[c](j) > decisions[best](j)) best = c;
    }
    out[static_cast<std::size_t>(j)] = clf.classes[best];
  }
  return out;
}

}  // namespace pcvmtl
