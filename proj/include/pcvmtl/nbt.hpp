#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/nystrom.hpp"
#include "pcvmtl/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace pcvmtl {

struct AugmentationReport {
  Index added = 0;
  Index removed = 0;
  /// Class-wise feature means and (population) variances of the input.
  std::map<int, VectorXd> class_means;
  std::map<int, VectorXd> class_variances;
  Index target_size = 0;
};

/// Resizes the labeled source set to `m` samples.
///
/// Growing draws from the axis-aligned Gaussian of whichever class is
/// currently smallest and appends the sample with that label. Shrinking
/// removes a uniformly chosen member of the currently largest class. Ties go
/// to the smaller class id. Surviving rows keep their original order.
inline std::pair<Dataset, AugmentationReport> augment_source(const Dataset& z, Index m,
                                                             std::uint64_t seed) {
  z.validate();
  if (m < 1) throw InputError("augment_source: target size must be positive");

  AugmentationReport report;
  report.target_size = m;
  std::map<int, std::vector<Index>> members;
  for (Index i = 0; i < z.n(); ++i) members[z.labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [label, rows] : members) {
    VectorXd mean = VectorXd::Zero(z.d());
    for (Index i : rows) mean += z.features.row(i).transpose();
    mean /= static_cast<double>(rows.size());
    VectorXd var = VectorXd::Zero(z.d());
    for (Index i : rows) var += (z.features.row(i).transpose() - mean).cwiseAbs2();
    var /= static_cast<double>(rows.size());
    report.class_means[label] = std::move(mean);
    report.class_variances[label] = std::move(var);
  }

  Rng rng(seed);
  if (z.n() == m) return {z, report};

  if (z.n() > m) {
    if (m < static_cast<Index>(members.size())) {
      throw InputError("augment_source: cannot shrink to " + std::to_string(m) + " samples and keep all " +
                       std::to_string(members.size()) + " classes");
    }
    std::vector<bool> dropped(static_cast<std::size_t>(z.n()), false);
    for (Index left = z.n(); left > m; --left) {
      auto largest = members.begin();
      for (auto it = members.begin(); it != members.end(); ++it) {
        if (it->second.size() > largest->second.size()) largest = it;
      }
      auto& rows = largest->second;
      const Index pick = rng.uniform_index(static_cast<Index>(rows.size()));
      dropped[static_cast<std::size_t>(rows[static_cast<std::size_t>(pick)])] = true;
      rows.erase(rows.begin() + pick);
      ++report.removed;
    }
    std::vector<Index> keep;
    for (Index i = 0; i < z.n(); ++i) {
      if (!dropped[static_cast<std::size_t>(i)]) keep.push_back(i);
    }
    return {z.subset(keep), report};
  }

  std::map<int, Index> sizes;
  for (const auto& [label, rows] : members) sizes[label] = static_cast<Index>(rows.size());
  Dataset out = z;
  const Index grow = m - z.n();
  out.features.conservativeResize(m, Eigen::NoChange);
  for (Index k = 0; k < grow; ++k) {
    auto smallest = sizes.begin();
    for (auto it = sizes.begin(); it != sizes.end(); ++it) {
      if (it->second < smallest->second) smallest = it;
    }
    const int label = smallest->first;
    const VectorXd& mean = report.class_means[label];
    const VectorXd& var = report.class_variances[label];
    for (Index j = 0; j < z.d(); ++j) {
      out.features(z.n() + k, j) = mean(j) + std::sqrt(var(j)) * rng.normal();
    }
    out.labels.push_back(label);
    ++smallest->second;
    ++report.added;
  }
  return {std::move(out), report};
}

/// Norm of the difference of two spectra after descending sort; the shorter
/// one is zero-padded.
inline double nbt_error(VectorXd a, VectorXd b) {
  std::sort(a.data(), a.data() + a.size(), std::greater<>());
  std::sort(b.data(), b.data() + b.size(), std::greater<>());
  const Index len = std::max(a.size(), b.size());
  VectorXd pa = VectorXd::Zero(len);
  VectorXd pb = VectorXd::Zero(len);
  pa.head(a.size()) = a;
  pb.head(b.size()) = b;
  return (pa - pb).norm();
}

/// Source and target in the target's (Nystrom) principal basis.
struct NbtResult {
  MatrixXd Z_s;     // m x k, L~_X diag(S_Z)
  MatrixXd X_s;     // m x k, L~_X diag(S_X)
  VectorXd S_Z;     // source landmark singular values (all retained)
  VectorXd S_X;     // target landmark singular values (all retained)
  MatrixXd L_X;     // m x k, extrapolated target left singular vectors
  MatrixXd R_X;     // s x k, right singular vectors of the target landmark block
  double transfer_error = 0.0;
  std::vector<Index> source_rows, source_cols;
  std::vector<Index> target_rows, target_cols;

  Index k() const { return X_s.cols(); }
};

/// Basis transfer with explicit landmark selections for both domains.
/// Rows of Z_s and X_s follow the row order of the target.
inline NbtResult nbt_fit(const MatrixXd& z, const MatrixXd& x, Index s,
                         const LandmarkSelection& source_selection,
                         const LandmarkSelection& target_selection) {
  if (z.rows() != x.rows() || z.cols() != x.cols()) {
    throw InputError("nbt_fit: source is " + std::to_string(z.rows()) + "x" +
                     std::to_string(z.cols()) + ", target is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + "; shapes must match");
  }
  const Index limit = std::min(x.rows(), x.cols());
  if (s < 1 || s > limit) {
    throw InputError("nbt_fit: landmark count " + std::to_string(s) + " outside [1, " +
                     std::to_string(limit) + "]");
  }
  const auto source = nystrom_svd(z, s, source_selection);
  const auto target = nystrom_svd(x, s, target_selection);

  NbtResult out;
  out.S_Z = source.S;
  out.S_X = target.S;
  out.source_rows = source.row_landmarks;
  out.source_cols = source.col_landmarks;
  out.target_rows = target.row_landmarks;
  out.target_cols = target.col_landmarks;
  out.transfer_error = nbt_error(out.S_Z, out.S_X);

  // Spectra are already descending; use the common retained length.
  const Index k = std::min(source.rank(), target.rank());
  out.L_X = target.L_full.leftCols(k);
  out.R_X = target.R.leftCols(k);
  out.X_s = out.L_X * out.S_X.head(k).asDiagonal();
  out.Z_s = out.L_X * out.S_Z.head(k).asDiagonal();
  return out;
}

/// Basis transfer with independent uniform landmark draws for source and target.
inline NbtResult nbt_fit(const MatrixXd& z, const MatrixXd& x, Index s, std::uint64_t seed) {
  Rng rng(seed);
  const auto source_seed = rng.next();
  const auto target_seed = rng.next();
  return nbt_fit(z, x, s, LandmarkSelection::random(source_seed),
                 LandmarkSelection::random(target_seed));
}

}  // namespace pcvmtl
