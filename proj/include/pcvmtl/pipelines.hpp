#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/kernel.hpp"
#include "pcvmtl/nbt.hpp"
#include "pcvmtl/pcvm.hpp"
#include "pcvmtl/random.hpp"
#include "pcvmtl/tkl.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace pcvmtl {

/// Labels for the target set plus the probit output behind each label: P(y =
/// positive class) for binary models, the winning class score otherwise.
struct TargetPrediction {
  std::vector<int> labels;
  VectorXd probabilities;
};

namespace detail {

inline TargetPrediction predict_target(const Classifier& clf, const KernelRows& rows) {
  TargetPrediction out;
  out.labels = one_vs_rest_predict(clf, rows);
  if (clf.binary()) {
    const auto& m = clf.models.front();
    out.probabilities = pcvm_predict(m, rows(m.retained_indices)).probabilities;
  } else {
    out.probabilities.resize(static_cast<Index>(out.labels.size()));
    for (std::size_t c = 0; c < clf.classes.size(); ++c) {
      const auto& m = clf.models[c];
      const auto p = pcvm_predict(m, rows(m.retained_indices)).probabilities;
      for (std::size_t j = 0; j < out.labels.size(); ++j) {
        if (out.labels[j] == clf.classes[c]) out.probabilities(static_cast<Index>(j)) = p(static_cast<Index>(j));
      }
    }
  }
  return out;
}

inline MatrixXd select_rows(const MatrixXd& m, const std::vector<Index>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace detail

struct PctkvmConfig {
  KernelSpec kernel;
  double zeta = 1.0;
  std::optional<Index> max_rank;
  TrainConfig train;
};

/// PCVM trained on the transfer kernel; predicts the target set it was fitted
/// with.
struct PctkvmEstimator {
  TransferKernel transfer;
  Classifier classifier;
  PctkvmConfig config;
};

/// Fits the transfer kernel between labeled source `z` and unlabeled target
/// features `x`, then trains the classifier on the learned source kernel.
inline PctkvmEstimator pctkvm_fit(const Dataset& z, const MatrixXd& x, const PctkvmConfig& cfg) {
  z.validate();
  PctkvmEstimator est;
  est.config = cfg;
  est.transfer = tkl_fit(z.features, x, cfg.kernel, cfg.zeta, cfg.max_rank);
  est.classifier = train_classifier(est.transfer.K_bar_Z, z.labels, cfg.train);
  return est;
}

/// Predicts the fitted target through K~_XZ restricted to the retained basis.
inline TargetPrediction pctkvm_predict(const PctkvmEstimator& est) {
  const MatrixXd& k_xz = est.transfer.K_bar_XZ;
  return detail::predict_target(est.classifier, [&](const std::vector<Index>& idx) {
    MatrixXd rows(static_cast<Index>(idx.size()), k_xz.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) rows.row(static_cast<Index>(i)) = k_xz.col(idx[i]).transpose();
    return rows;
  });
}

struct NtvmConfig {
  KernelSpec kernel;
  /// Landmark count; 0 selects min(m, d).
  Index landmarks = 0;
  std::uint64_t seed = 0;
  TrainConfig train;
};

/// Basis transfer followed by a PCVM on the RBF gram of the transferred
/// source.
struct NtvmEstimator {
  NbtResult nbt;
  Classifier classifier;
  NtvmConfig config;
  NormalizationStats source_stats;
  NormalizationStats target_stats;
  AugmentationReport augmentation;
  /// Labels of the augmented source, aligned with the rows of nbt.Z_s.
  std::vector<int> train_labels;
};

/// Normalizes each domain, resizes the source to the target size, transfers
/// the target basis and trains on the transferred source. Labels attach to
/// Z_s by row position.
inline NtvmEstimator ntvm_fit(const Dataset& z, const MatrixXd& x, const NtvmConfig& cfg) {
  z.validate();
  if (z.d() != x.cols()) {
    throw InputError("ntvm_fit: dimension mismatch (" + std::to_string(z.d()) + " vs " +
                     std::to_string(x.cols()) + ")");
  }
  Rng rng(cfg.seed);
  const auto augment_seed = rng.next();
  const auto landmark_seed = rng.next();

  NtvmEstimator est;
  est.config = cfg;
  auto [zn, zs] = normalize(z);
  est.source_stats = std::move(zs);
  est.target_stats = compute_stats(x);
  const MatrixXd xn = apply_stats(x, est.target_stats);

  auto [za, report] = augment_source(zn, x.rows(), augment_seed);
  est.augmentation = std::move(report);
  const Index s = cfg.landmarks > 0 ? cfg.landmarks : std::min(x.rows(), x.cols());
  est.config.landmarks = s;
  est.nbt = nbt_fit(za.features, xn, s, landmark_seed);
  est.train_labels = za.labels;
  est.classifier =
      train_classifier(gram(cfg.kernel, est.nbt.Z_s, est.nbt.Z_s), est.train_labels, cfg.train);
  return est;
}

/// Predicts the fitted target from the transferred representation X_s.
inline TargetPrediction ntvm_predict(const NtvmEstimator& est) {
  return detail::predict_target(est.classifier, [&](const std::vector<Index>& idx) {
    return gram(est.config.kernel, detail::select_rows(est.nbt.Z_s, idx), est.nbt.X_s);
  });
}

}  // namespace pcvmtl
