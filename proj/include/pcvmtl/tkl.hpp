#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/kernel.hpp"
#include "pcvmtl/nystrom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace pcvmtl {

/// Objective terms of min_L |U diag(L) U' - K|_F^2 written as
/// L' Q L - 2 c' L + |K|_F^2 with Q = (U'U) o (U'U) and c_i = u_i' K u_i.
struct SpectralObjective {
  MatrixXd Q;
  VectorXd c;
  double constant = 0.0;

  double operator()(const VectorXd& lambda) const {
    return lambda.dot(Q * lambda) - 2.0 * c.dot(lambda) + constant;
  }
};

inline SpectralObjective spectral_objective(const MatrixXd& u_bar, const MatrixXd& k_z) {
  if (k_z.rows() != k_z.cols() || k_z.rows() != u_bar.rows()) {
    throw InputError("spectral_qp: shape mismatch between eigenvectors and kernel");
  }
  const MatrixXd gram_u = u_bar.transpose() * u_bar;
  SpectralObjective obj;
  obj.Q = gram_u.cwiseProduct(gram_u);
  obj.c = (u_bar.transpose() * k_z * u_bar).diagonal();
  obj.constant = k_z.squaredNorm();
  return obj;
}

namespace detail {

/// Active-set solve of min 0.5 x'Hx - g'x subject to x >= 0 (Lawson-Hanson
/// structure on the normal equations). H must be symmetric PSD.
inline VectorXd nonnegative_qp(const MatrixXd& h, const VectorXd& g, double tol = 1e-12) {
  const Index r = g.size();
  VectorXd x = VectorXd::Zero(r);
  std::vector<bool> passive(static_cast<std::size_t>(r), false);
  const double g_scale = std::max(1.0, g.cwiseAbs().maxCoeff());

  auto solve_passive = [&](const std::vector<Index>& idx) {
    const auto p = static_cast<Index>(idx.size());
    MatrixXd hp(p, p);
    VectorXd gp(p);
    for (Index i = 0; i < p; ++i) {
      gp(i) = g(idx[static_cast<std::size_t>(i)]);
      for (Index j = 0; j < p; ++j) {
        hp(i, j) = h(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
    }
    return VectorXd(hp.completeOrthogonalDecomposition().solve(gp));
  };

  const int max_outer = static_cast<int>(3 * r + 10);
  for (int outer = 0; outer < max_outer; ++outer) {
    const VectorXd grad = g - h * x;  // negative gradient
    Index best = -1;
    double best_value = tol * g_scale;
    for (Index i = 0; i < r; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && grad(i) > best_value) {
        best_value = grad(i);
        best = i;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner <= r; ++inner) {
      std::vector<Index> idx;
      for (Index i = 0; i < r; ++i) {
        if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
      }
      const VectorXd z = solve_passive(idx);
      if ((z.array() > 0.0).all()) {
        x.setZero();
        for (std::size_t i = 0; i < idx.size(); ++i) x(idx[i]) = z(static_cast<Index>(i));
        break;
      }
      // Step toward z until the first passive variable hits zero.
      double alpha = 1.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const double zi = z(static_cast<Index>(i));
        const double xi = x(idx[i]);
        if (zi <= 0.0) alpha = std::min(alpha, xi / (xi - zi));
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        x(idx[i]) += alpha * (z(static_cast<Index>(i)) - x(idx[i]));
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (x(idx[i]) <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          x(idx[i]) = 0.0;
          passive[static_cast<std::size_t>(idx[i])] = false;
        }
      }
    }
  }
  return x;
}

}  // namespace detail

/// Minimizes |U diag(L) U' - K_Z|_F^2 subject to L_i >= zeta L_{i+1} and
/// L >= 0.
///
/// With L_i = zeta^-(i-1) * sum_{j>=i} g_j the constraints become g >= 0,
/// and the problem is a non-negative quadratic program in g. The variables
/// are rescaled to a unit-diagonal Hessian before the active-set solve.
inline VectorXd spectral_qp(const MatrixXd& u_bar, const MatrixXd& k_z, double zeta) {
  if (!(zeta >= 1.0) || !std::isfinite(zeta)) {
    throw InputError("spectral_qp: damping factor must be >= 1, got " + std::to_string(zeta));
  }
  if (!u_bar.allFinite() || !k_z.allFinite()) {
    throw InputError("spectral_qp: non-finite inputs");
  }
  const Index r = u_bar.cols();
  if (r == 0) return VectorXd(0);
  const auto obj = spectral_objective(u_bar, k_z);

  // lambda = T g with T(i, j) = zeta^-i for j >= i (0-based).
  VectorXd decay(r);
  for (Index i = 0; i < r; ++i) decay(i) = std::pow(zeta, -static_cast<double>(i));
  MatrixXd t = MatrixXd::Zero(r, r);
  for (Index i = 0; i < r; ++i) t.row(i).tail(r - i).setConstant(decay(i));

  MatrixXd h = 2.0 * t.transpose() * obj.Q * t;
  VectorXd g = 2.0 * t.transpose() * obj.c;
  VectorXd scale(r);
  for (Index i = 0; i < r; ++i) scale(i) = h(i, i) > 0.0 ? 1.0 / std::sqrt(h(i, i)) : 1.0;
  h = scale.asDiagonal() * h * scale.asDiagonal();
  g = scale.asDiagonal() * g;

  const VectorXd gamma = scale.cwiseProduct(detail::nonnegative_qp(h, g));
  if (!gamma.allFinite()) throw NumericalError("spectral_qp", "solver produced non-finite values");

  VectorXd lambda(r);
  double suffix = 0.0;
  for (Index i = r - 1; i >= 0; --i) {
    suffix += gamma(i);
    lambda(i) = decay(i) * suffix;
  }
  return lambda;
}

/// Learned source kernel built from the target eigensystem.
struct TransferKernel {
  MatrixXd U_X;        // m x r target eigenvectors
  VectorXd lambda_X;   // r target eigenvalues, descending
  VectorXd lambda;     // r optimized eigenvalues
  MatrixXd U_bar_Z;    // n x r extrapolated source eigenvectors
  MatrixXd K_bar_Z;    // n x n training kernel
  MatrixXd K_bar_XZ;   // m x n test-side kernel
  double zeta = 1.0;
  KernelSpec kernel;

  Index r() const { return lambda.size(); }
};

/// Transfer kernel learning. `max_rank` caps the number of target
/// eigenvectors; by default every eigenvalue above the spectral floor is used.
inline TransferKernel tkl_fit(const MatrixXd& z, const MatrixXd& x, const KernelSpec& spec,
                              double zeta, std::optional<Index> max_rank = {}) {
  spec.validate();
  if (z.cols() != x.cols()) {
    throw InputError("tkl_fit: dimension mismatch (" + std::to_string(z.cols()) + " vs " +
                     std::to_string(x.cols()) + ")");
  }
  if (!(zeta >= 1.0)) throw InputError("tkl_fit: damping factor must be >= 1");
  if (max_rank && (*max_rank < 1 || *max_rank > x.rows())) {
    throw InputError("tkl_fit: eigenvector count must lie in [1, " + std::to_string(x.rows()) + "]");
  }

  // Distances once, all kernel blocks from them.
  const MatrixXd k_x = kernel_from_distances(spec, squared_distances(x, x));
  const MatrixXd k_z = kernel_from_distances(spec, squared_distances(z, z));
  const MatrixXd k_zx = kernel_from_distances(spec, squared_distances(z, x));

  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k_x);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("tkl_fit", "eigendecomposition of the target kernel failed");
  }
  const VectorXd& values = eig.eigenvalues();  // ascending
  const Index m = values.size();
  const double top = values(m - 1);
  Index r = 0;
  while (r < m && top > 0.0 && values(m - 1 - r) > kSpectralFloor * top) ++r;
  if (r == 0) throw NumericalError("tkl_fit", "degenerate target kernel (no eigenvalue above floor)");
  if (max_rank) r = std::min(r, *max_rank);

  TransferKernel out;
  out.zeta = zeta;
  out.kernel = spec;
  out.U_X.resize(m, r);
  out.lambda_X.resize(r);
  for (Index j = 0; j < r; ++j) {
    out.U_X.col(j) = eig.eigenvectors().col(m - 1 - j);
    out.lambda_X(j) = values(m - 1 - j);
  }
  out.U_bar_Z = k_zx * out.U_X * out.lambda_X.cwiseInverse().asDiagonal();
  out.lambda = spectral_qp(out.U_bar_Z, k_z, zeta);

  const MatrixXd scaled = out.U_bar_Z * out.lambda.asDiagonal();
  const MatrixXd k_bar = scaled * out.U_bar_Z.transpose();
  out.K_bar_Z = 0.5 * (k_bar + k_bar.transpose());
  out.K_bar_XZ = out.U_X * out.lambda.asDiagonal() * out.U_bar_Z.transpose();
  return out;
}

inline TransferKernel tkl_fit(const Dataset& z, const Dataset& x, const KernelSpec& spec,
                              double zeta, std::optional<Index> max_rank = {}) {
  z.validate();
  x.validate();
  return tkl_fit(z.features, x.features, spec, zeta, max_rank);
}

}  // namespace pcvmtl
