#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace pcvmtl {

enum class KernelKind { rbf };

inline std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::rbf:
      return "rbf";
  }
  return "unknown";
}

/// Kernel family plus its width. RBF convention: exp(-|x - x'|^2 / theta^2).
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double theta = 1.0;

  void validate() const {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
      throw InputError("kernel width theta must be positive and finite, got " +
                       std::to_string(theta));
    }
  }
};

struct KernelMatrix {
  MatrixXd values;
  std::string row_source;
  std::string col_source;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
///
/// Each entry is summed coordinate-wise, so swapping the arguments yields
/// the exact transpose.
inline MatrixXd squared_distances(const MatrixXd& a, const MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw InputError("squared_distances: dimension mismatch (" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.cols()) + ")");
  }
  // Row-major copies keep each sample contiguous for the inner loop.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ra = a;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rb = b;
  MatrixXd out(a.rows(), b.rows());
  for (Index j = 0; j < rb.rows(); ++j) {
    for (Index i = 0; i < ra.rows(); ++i) {
      out(i, j) = (ra.row(i) - rb.row(j)).squaredNorm();
    }
  }
  return out;
}

/// Applies the kernel profile to precomputed squared distances.
inline MatrixXd kernel_from_distances(const KernelSpec& spec, const MatrixXd& sq_dist) {
  spec.validate();
  const double scale = 1.0 / (spec.theta * spec.theta);
  return (-sq_dist.array() * scale).exp().matrix();
}

inline MatrixXd gram(const KernelSpec& spec, const MatrixXd& rows, const MatrixXd& cols) {
  spec.validate();
  return kernel_from_distances(spec, squared_distances(rows, cols));
}

inline KernelMatrix gram(const KernelSpec& spec, const Dataset& rows, const Dataset& cols) {
  if (rows.d() != cols.d()) {
    throw InputError("gram: dimension mismatch between '" + rows.name + "' (" +
                     std::to_string(rows.d()) + ") and '" + cols.name + "' (" +
                     std::to_string(cols.d()) + ")");
  }
  return {gram(spec, rows.features, cols.features), rows.name, cols.name};
}

}  // namespace pcvmtl
