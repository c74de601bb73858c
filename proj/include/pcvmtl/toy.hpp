#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/random.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>

namespace pcvmtl {

/// Two-class synthetic domains built from a 2-D latent sample. For d > 2 the
/// latent plane is embedded through a fixed orthonormal d x 2 map shared by
/// both domains, and every feature gets independent noise. Samples are
/// class-sorted (label 0 first) with equal halves, so source and target rows
/// line up class by class.
struct ToyParams {
  double class_offset = 1.0;  // latent class means at (0, -offset) and (0, +offset)
  double spread = 3.0;        // latent sd along the first axis
  double width = 0.4;         // latent sd along the second axis
  double noise_sd = 0.2;      // per-feature noise when d > 2
};

struct ToyPair {
  Dataset source;
  Dataset target;
};

namespace detail {

inline void check_toy_sizes(Index n, Index m, Index d) {
  if (n < 2 || m < 2 || d < 2) {
    throw InputError("toy sizes must satisfy n, m, d >= 2 (got n=" + std::to_string(n) +
                     ", m=" + std::to_string(m) + ", d=" + std::to_string(d) + ")");
  }
}

inline MatrixXd toy_embedding(Index d, Rng& rng) {
  if (d == 2) return MatrixXd::Identity(2, 2);
  MatrixXd g(d, 2);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < 2; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return qr.householderQ() * MatrixXd::Identity(d, 2);
}

/// Latent point rotated by `angle` and moved by `shift`, then embedded.
inline Dataset toy_domain(Index n, const MatrixXd& embed, double angle_rad, double shift,
                          const ToyParams& p, Rng& rng, std::string name) {
  const Index d = embed.rows();
  Dataset ds;
  ds.name = std::move(name);
  ds.features.resize(n, d);
  ds.labels.resize(static_cast<std::size_t>(n));
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const Index first = n / 2;
  for (Index i = 0; i < n; ++i) {
    const int label = i < first ? 0 : 1;
    const double u = p.spread * rng.normal();
    const double v = (label == 0 ? -p.class_offset : p.class_offset) + p.width * rng.normal();
    const Eigen::Vector2d latent(c * u - s * v + shift, s * u + c * v + shift);
    ds.features.row(i) = (embed * latent).transpose();
    if (d > 2) {
      for (Index j = 0; j < d; ++j) ds.features(i, j) += p.noise_sd * rng.normal();
    }
    ds.labels[static_cast<std::size_t>(i)] = label;
  }
  return ds;
}

}  // namespace detail

/// Source drawn unrotated, target rotated by `angle_deg` about the origin.
inline ToyPair rotated_gaussians(Index n, Index m, Index d, double angle_deg, std::uint64_t seed,
                                 const ToyParams& p = {}) {
  detail::check_toy_sizes(n, m, d);
  Rng rng(seed);
  const MatrixXd embed = detail::toy_embedding(d, rng);
  ToyPair pair;
  pair.source = detail::toy_domain(n, embed, 0.0, 0.0, p, rng, "source");
  pair.target = detail::toy_domain(m, embed, angle_deg * std::numbers::pi / 180.0, 0.0, p, rng, "target");
  return pair;
}

/// Target signal features translated by `shift` in both signal coordinates.
inline ToyPair shifted_means(Index n, Index m, Index d, double shift, std::uint64_t seed,
                             const ToyParams& p = {}) {
  detail::check_toy_sizes(n, m, d);
  Rng rng(seed);
  const MatrixXd embed = detail::toy_embedding(d, rng);
  ToyPair pair;
  pair.source = detail::toy_domain(n, embed, 0.0, 0.0, p, rng, "source");
  pair.target = detail::toy_domain(m, embed, 0.0, shift, p, rng, "target");
  return pair;
}

/// Two isotropic Gaussian classes at -offset and +offset in every coordinate.
inline Dataset two_gaussians(Index per_class, Index d, double offset, double sd, std::uint64_t seed) {
  if (per_class < 1 || d < 1) throw InputError("two_gaussians: sizes must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.name = "two-gaussians";
  ds.features.resize(2 * per_class, d);
  ds.labels.resize(static_cast<std::size_t>(2 * per_class));
  for (Index i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    const double mean = label == 0 ? -offset : offset;
    for (Index j = 0; j < d; ++j) ds.features(i, j) = mean + sd * rng.normal();
    ds.labels[static_cast<std::size_t>(i)] = label;
  }
  return ds;
}

}  // namespace pcvmtl
