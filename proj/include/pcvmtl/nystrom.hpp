#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/kernel.hpp"
#include "pcvmtl/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace pcvmtl {

/// Eigen/singular values with magnitude at or below this fraction of the
/// largest one are treated as zero and their directions dropped.
inline constexpr double kSpectralFloor = 1e-10;

/// How landmark rows/columns are chosen.
struct LandmarkSelection {
  enum class Mode { random, given };

  Mode mode = Mode::random;
  std::uint64_t seed = 0;
  std::vector<Index> rows;
  std::vector<Index> cols;

  static LandmarkSelection random(std::uint64_t seed) { return {Mode::random, seed, {}, {}}; }
  /// Same indices for rows and columns.
  static LandmarkSelection given(std::vector<Index> indices) {
    auto cols = indices;
    return {Mode::given, 0, std::move(indices), std::move(cols)};
  }
  static LandmarkSelection given(std::vector<Index> rows, std::vector<Index> cols) {
    return {Mode::given, 0, std::move(rows), std::move(cols)};
  }
};

/// Landmark block split of a matrix: A = M[rows, cols], B = M[rows, rest],
/// C = M[rest, cols]. The complement block D is never formed.
struct BlockDecomposition {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C;
  std::vector<Index> row_landmarks;
  std::vector<Index> col_landmarks;
  std::vector<Index> row_rest;
  std::vector<Index> col_rest;

  Index s() const { return A.rows(); }
};

namespace detail {

inline std::vector<Index> complement(const std::vector<Index>& chosen, Index n) {
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (Index i : chosen) taken[static_cast<std::size_t>(i)] = true;
  std::vector<Index> rest;
  rest.reserve(static_cast<std::size_t>(n) - chosen.size());
  for (Index i = 0; i < n; ++i) {
    if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
  }
  return rest;
}

inline void check_indices(const std::vector<Index>& idx, Index s, Index n, const char* what) {
  if (static_cast<Index>(idx.size()) != s) {
    throw InputError(std::string("decompose: expected ") + std::to_string(s) + " " + what +
                     " landmarks, got " + std::to_string(idx.size()));
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index i : idx) {
    if (i < 0 || i >= n) {
      throw InputError(std::string("decompose: ") + what + " landmark " + std::to_string(i) +
                       " out of range [0, " + std::to_string(n) + ")");
    }
    if (seen[static_cast<std::size_t>(i)]) {
      throw InputError(std::string("decompose: duplicate ") + what + " landmark " +
                       std::to_string(i));
    }
    seen[static_cast<std::size_t>(i)] = true;
  }
}

inline MatrixXd gather(const MatrixXd& m, const std::vector<Index>& rows,
                       const std::vector<Index>& cols) {
  MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

/// Indices of `values` kept after the spectral floor, ordered by descending
/// magnitude.
inline std::vector<Index> kept_by_magnitude(const VectorXd& values) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(values(a)) > std::abs(values(b));
  });
  if (order.empty()) return order;
  const double top = std::abs(values(order.front()));
  std::vector<Index> kept;
  for (Index i : order) {
    if (top > 0.0 && std::abs(values(i)) > kSpectralFloor * top) kept.push_back(i);
  }
  return kept;
}

inline bool is_symmetric(const MatrixXd& k) {
  if (k.rows() != k.cols()) return false;
  const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
  return (k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

}  // namespace detail

/// Splits `m` into landmark blocks. With `shared` the same indices select rows
/// and columns (square input); otherwise random selection draws them
/// independently.
inline BlockDecomposition decompose(const MatrixXd& m, Index s, const LandmarkSelection& selection,
                                    bool shared = false) {
  if (shared && m.rows() != m.cols()) {
    throw InputError("decompose: shared landmarks need a square matrix");
  }
  const Index limit = std::min(m.rows(), m.cols());
  if (s < 1 || s > limit) {
    throw InputError("decompose: landmark count " + std::to_string(s) + " outside [1, " +
                     std::to_string(limit) + "]");
  }
  BlockDecomposition out;
  if (selection.mode == LandmarkSelection::Mode::random) {
    Rng rng(selection.seed);
    out.row_landmarks = rng.sample_without_replacement(m.rows(), s);
    out.col_landmarks = shared ? out.row_landmarks : rng.sample_without_replacement(m.cols(), s);
  } else {
    out.row_landmarks = selection.rows;
    out.col_landmarks = selection.cols.empty() ? selection.rows : selection.cols;
    if (shared && out.col_landmarks != out.row_landmarks) {
      throw InputError("decompose: symmetric factorization needs identical row/column landmarks");
    }
  }
  detail::check_indices(out.row_landmarks, s, m.rows(), "row");
  detail::check_indices(out.col_landmarks, s, m.cols(), "column");
  out.row_rest = detail::complement(out.row_landmarks, m.rows());
  out.col_rest = detail::complement(out.col_landmarks, m.cols());
  out.A = detail::gather(m, out.row_landmarks, out.col_landmarks);
  out.B = detail::gather(m, out.row_landmarks, out.col_rest);
  out.C = detail::gather(m, out.row_rest, out.col_landmarks);
  return out;
}

/// Nystrom eigendecomposition. Rows/columns of the full factors are in the
/// original matrix order; `U` equals the rows of `U_full` at `landmarks`.
struct NystromEvd {
  MatrixXd U;        // s x k
  VectorXd lambda;   // k, descending by magnitude
  MatrixXd U_full;   // n x k
  MatrixXd V_inv;    // k x n
  std::vector<Index> landmarks;

  Index rank() const { return lambda.size(); }
};

inline NystromEvd nystrom_evd(const MatrixXd& k, Index s, const LandmarkSelection& selection) {
  if (!detail::is_symmetric(k)) throw InputError("nystrom_evd: input is not symmetric");
  const auto blocks = decompose(k, s, selection, /*shared=*/true);

  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(
      0.5 * (blocks.A + blocks.A.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("nystrom_evd", "eigendecomposition of landmark block failed");
  }
  const auto kept = detail::kept_by_magnitude(eig.eigenvalues());
  if (kept.empty()) {
    throw NumericalError("nystrom_evd", "all landmark eigenvalues are below the spectral floor");
  }
  const auto r = static_cast<Index>(kept.size());

  NystromEvd out;
  out.landmarks = blocks.row_landmarks;
  out.U.resize(s, r);
  out.lambda.resize(r);
  for (Index j = 0; j < r; ++j) {
    out.U.col(j) = eig.eigenvectors().col(kept[static_cast<std::size_t>(j)]);
    out.lambda(j) = eig.eigenvalues()(kept[static_cast<std::size_t>(j)]);
  }
  const VectorXd inv_lambda = out.lambda.cwiseInverse();
  // U is orthonormal, so its (pseudo-)inverse is the transpose.
  const MatrixXd u_hat = blocks.C * out.U * inv_lambda.asDiagonal();
  const MatrixXd v_rest = inv_lambda.asDiagonal() * out.U.transpose() * blocks.B;

  const Index n = k.rows();
  out.U_full.resize(n, r);
  out.V_inv.resize(r, n);
  for (Index i = 0; i < s; ++i) {
    const Index at = blocks.row_landmarks[static_cast<std::size_t>(i)];
    out.U_full.row(at) = out.U.row(i);
    out.V_inv.col(at) = out.U.row(i).transpose();
  }
  for (std::size_t i = 0; i < blocks.row_rest.size(); ++i) {
    const Index at = blocks.row_rest[i];
    out.U_full.row(at) = u_hat.row(static_cast<Index>(i));
    out.V_inv.col(at) = v_rest.col(static_cast<Index>(i));
  }
  return out;
}

inline MatrixXd reconstruct(const NystromEvd& f) {
  return f.U_full * f.lambda.asDiagonal() * f.V_inv;
}

/// Nystrom approximation of a PSD kernel from its landmark columns:
/// K_ns * pinv(K_ss) * K_ns^T.
inline MatrixXd nystrom_kernel(const MatrixXd& k_ns, const MatrixXd& k_ss) {
  if (k_ss.rows() != k_ss.cols() || k_ns.cols() != k_ss.rows()) {
    throw InputError("nystrom_kernel: shape mismatch (K_ns " + std::to_string(k_ns.rows()) +
                     "x" + std::to_string(k_ns.cols()) + ", K_ss " +
                     std::to_string(k_ss.rows()) + "x" + std::to_string(k_ss.cols()) + ")");
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (k_ss + k_ss.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("nystrom_kernel", "eigendecomposition of landmark block failed");
  }
  const auto kept = detail::kept_by_magnitude(eig.eigenvalues());
  MatrixXd basis(k_ss.rows(), static_cast<Index>(kept.size()));
  VectorXd inv(static_cast<Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    basis.col(static_cast<Index>(j)) = eig.eigenvectors().col(kept[j]);
    inv(static_cast<Index>(j)) = 1.0 / eig.eigenvalues()(kept[j]);
  }
  const MatrixXd f = k_ns * basis;
  const MatrixXd out = f * inv.asDiagonal() * f.transpose();
  return 0.5 * (out + out.transpose());
}

/// Convenience: Nystrom kernel of `data` using `s` landmark samples.
inline MatrixXd nystrom_kernel(const KernelSpec& spec, const MatrixXd& data, Index s,
                               const LandmarkSelection& selection) {
  if (s < 1 || s > data.rows()) {
    throw InputError("nystrom_kernel: landmark count " + std::to_string(s) +
                     " outside [1, " + std::to_string(data.rows()) + "]");
  }
  std::vector<Index> idx = selection.mode == LandmarkSelection::Mode::random
                               ? Rng(selection.seed).sample_without_replacement(data.rows(), s)
                               : selection.rows;
  detail::check_indices(idx, s, data.rows(), "row");
  MatrixXd landmarks(s, data.cols());
  for (Index i = 0; i < s; ++i) landmarks.row(i) = data.row(idx[static_cast<std::size_t>(i)]);
  const MatrixXd k_ns = gram(spec, data, landmarks);
  const MatrixXd k_ss = gram(spec, landmarks, landmarks);
  return nystrom_kernel(k_ns, k_ss);
}

/// Nystrom SVD of a rectangular matrix from an s x s landmark block.
/// Factor rows follow the original row/column order of the input.
struct NystromSvd {
  MatrixXd L;       // s x k, left singular vectors of A
  VectorXd S;       // k, descending, positive
  MatrixXd R;       // s x k, right singular vectors of A
  MatrixXd L_full;  // rows x k
  MatrixXd R_full;  // cols x k
  std::vector<Index> row_landmarks;
  std::vector<Index> col_landmarks;

  Index rank() const { return S.size(); }
};

inline NystromSvd nystrom_svd(const MatrixXd& g, Index s, const LandmarkSelection& selection) {
  const auto blocks = decompose(g, s, selection, /*shared=*/false);
  const Eigen::JacobiSVD<MatrixXd> svd(blocks.A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  Index r = 0;
  while (r < sv.size() && sv(0) > 0.0 && sv(r) > kSpectralFloor * sv(0)) ++r;
  if (r == 0) {
    throw NumericalError("nystrom_svd", "all landmark singular values are below the spectral floor");
  }

  NystromSvd out;
  out.row_landmarks = blocks.row_landmarks;
  out.col_landmarks = blocks.col_landmarks;
  out.L = svd.matrixU().leftCols(r);
  out.R = svd.matrixV().leftCols(r);
  out.S = sv.head(r);
  const VectorXd inv_s = out.S.cwiseInverse();
  const MatrixXd l_hat = blocks.C * out.R * inv_s.asDiagonal();
  const MatrixXd r_hat = blocks.B.transpose() * out.L * inv_s.asDiagonal();

  out.L_full.resize(g.rows(), r);
  out.R_full.resize(g.cols(), r);
  for (Index i = 0; i < s; ++i) {
    out.L_full.row(blocks.row_landmarks[static_cast<std::size_t>(i)]) = out.L.row(i);
    out.R_full.row(blocks.col_landmarks[static_cast<std::size_t>(i)]) = out.R.row(i);
  }
  for (std::size_t i = 0; i < blocks.row_rest.size(); ++i) {
    out.L_full.row(blocks.row_rest[i]) = l_hat.row(static_cast<Index>(i));
  }
  for (std::size_t i = 0; i < blocks.col_rest.size(); ++i) {
    out.R_full.row(blocks.col_rest[i]) = r_hat.row(static_cast<Index>(i));
  }
  return out;
}

inline MatrixXd reconstruct(const NystromSvd& f) {
  return f.L_full * f.S.asDiagonal() * f.R_full.transpose();
}

/// Frobenius norm of the difference.
inline double approximation_error(const MatrixXd& approx, const MatrixXd& truth) {
  if (approx.rows() != truth.rows() || approx.cols() != truth.cols()) {
    throw InputError("approximation_error: shape mismatch");
  }
  return (approx - truth).norm();
}

}  // namespace pcvmtl
