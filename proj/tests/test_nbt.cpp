#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pcvmtl;

namespace {

Dataset labeled(const std::vector<int>& labels, Index d, Rng& rng) {
  return {oracle::gaussian_matrix(static_cast<Index>(labels.size()), d, rng), labels, "z"};
}

std::vector<int> repeat(std::initializer_list<std::pair<int, int>> spec) {
  std::vector<int> out;
  for (auto [label, count] : spec) out.insert(out.end(), static_cast<std::size_t>(count), label);
  return out;
}

std::vector<Index> iota(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

}  // namespace

TEST(Augment, IdentityWhenSizesMatch) {
  Rng rng(1);
  const auto z = labeled(repeat({{0, 3}, {1, 3}}), 2, rng);
  const auto [out, report] = augment_source(z, 6, 5);
  EXPECT_EQ(out.features, z.features);
  EXPECT_EQ(out.labels, z.labels);
  EXPECT_EQ(report.added, 0);
  EXPECT_EQ(report.removed, 0);
}

TEST(Augment, GrowsBalancedClasses) {
  Rng rng(2);
  const auto z = labeled(repeat({{-1, 4}, {1, 4}}), 3, rng);
  const auto [out, report] = augment_source(z, 10, 7);
  ASSERT_EQ(out.n(), 10);
  EXPECT_EQ(report.added, 2);
  EXPECT_EQ(out.class_counts().at(-1), 5);
  EXPECT_EQ(out.class_counts().at(1), 5);
  // Tie at 4/4 goes to -1, then 1 is the smaller class.
  EXPECT_EQ(out.labels[8], -1);
  EXPECT_EQ(out.labels[9], 1);
  EXPECT_TRUE(out.features.allFinite());
  EXPECT_EQ(out.features.topRows(8), z.features);
}

TEST(Augment, ShrinksLargestClass) {
  Rng rng(3);
  const auto z = labeled(repeat({{1, 8}, {-1, 4}}), 2, rng);
  const auto [out, report] = augment_source(z, 10, 11);
  ASSERT_EQ(out.n(), 10);
  EXPECT_EQ(report.removed, 2);
  EXPECT_EQ(out.class_counts().at(1), 6);
  EXPECT_EQ(out.class_counts().at(-1), 4);
  // Every class -1 row survives, in order.
  std::vector<Index> kept_neg;
  for (Index i = 0; i < out.n(); ++i) {
    if (out.labels[static_cast<std::size_t>(i)] == -1) kept_neg.push_back(i);
  }
  for (std::size_t k = 0; k < kept_neg.size(); ++k) {
    EXPECT_EQ(out.features.row(kept_neg[k]), z.features.row(static_cast<Index>(8 + k)));
  }
}

TEST(Augment, SingletonClassDuplicatesMean) {
  Rng rng(4);
  const auto z = labeled(repeat({{0, 1}, {1, 3}}), 2, rng);
  const auto [out, report] = augment_source(z, 6, 1);
  EXPECT_EQ(out.features.row(4), z.features.row(0));
  EXPECT_EQ(out.labels[4], 0);
}

TEST(Augment, Errors) {
  Rng rng(5);
  const auto z = labeled(repeat({{0, 2}, {1, 2}, {2, 2}}), 2, rng);
  EXPECT_THROW(augment_source(z, 2, 0), InputError);
  EXPECT_THROW(augment_source(z, 0, 0), InputError);
}

TEST(AugmentProperty, SizeLabelsAndDeterminism) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels;
    const int classes = 1 + static_cast<int>(rng.uniform_index(4));
    for (int c = 0; c < classes; ++c) labels.insert(labels.end(), static_cast<std::size_t>(1 + rng.uniform_index(10)), c * 3);
    const auto z = labeled(labels, 1 + rng.uniform_index(4), rng);
    const Index m = classes + rng.uniform_index(40);
    const auto seed = rng.next();
    const auto [a, ra] = augment_source(z, m, seed);
    const auto [b, rb] = augment_source(z, m, seed);
    EXPECT_EQ(a.n(), m);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_TRUE(ra.added == 0 || ra.removed == 0);
    if (m >= z.n()) EXPECT_EQ(a.label_set(), z.label_set());
  }
}

TEST(NbtError, Arithmetic) {
  EXPECT_EQ(nbt_error(Eigen::Vector2d(3, 1), Eigen::Vector2d(3, 1)), 0.0);
  EXPECT_DOUBLE_EQ(nbt_error(Eigen::Vector2d(3, 1), Eigen::Vector2d(3, 0)), 1.0);
  EXPECT_DOUBLE_EQ(nbt_error(Eigen::Vector3d(3, 1, 2), Eigen::Vector2d(3, 2)), 1.0);
}

TEST(NbtFit, SelfTransferIsExact) {
  Rng rng(7);
  const MatrixXd x = normalize(Dataset{oracle::gaussian_matrix(8, 8, rng), std::vector<int>(8, 0), "x"}).first.features;
  const auto sel = LandmarkSelection::given(iota(8));
  const auto r = nbt_fit(x, x, 8, sel, sel);
  EXPECT_LT((r.Z_s - r.X_s).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(r.transfer_error, 1e-10);
}

TEST(NbtFit, SquareFullLandmarksGivePrincipalScores) {
  Rng rng(8);
  for (Index n : {5, 12, 30}) {
    const MatrixXd x = oracle::gaussian_matrix(n, n, rng);
    const MatrixXd z = oracle::gaussian_matrix(n, n, rng);
    const auto r = nbt_fit(z, x, n, n * 7);
    EXPECT_LT(oracle::max_signed_column_gap(r.X_s, oracle::pca_scores(x, r.k())), 1e-6);
  }
}

TEST(NbtFit, Errors) {
  const MatrixXd a = MatrixXd::Identity(4, 3);
  EXPECT_THROW(nbt_fit(a, MatrixXd::Identity(5, 3), 2, 1), InputError);
  EXPECT_THROW(nbt_fit(a, a, 4, 1), InputError);
  EXPECT_THROW(nbt_fit(a, a, 0, 1), InputError);
}

TEST(NbtProperty, SharedBasisColumnScalingAndDeterminism) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Index m = 3 + rng.uniform_index(30);
    const Index d = 2 + rng.uniform_index(30);
    const MatrixXd z = oracle::gaussian_matrix(m, d, rng);
    const MatrixXd x = oracle::gaussian_matrix(m, d, rng);
    const Index s = 1 + rng.uniform_index(std::min(m, d));
    const auto seed = rng.next();
    const auto r = nbt_fit(z, x, s, seed);
    ASSERT_EQ(r.Z_s.rows(), r.X_s.rows());
    ASSERT_EQ(r.Z_s.cols(), r.X_s.cols());
    const Index k = r.k();
    const MatrixXd a = r.Z_s * r.S_Z.head(k).cwiseInverse().asDiagonal();
    const MatrixXd b = r.X_s * r.S_X.head(k).cwiseInverse().asDiagonal();
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff()));
    for (Index j = 0; j < k; ++j) {
      const VectorXd scaled = r.X_s.col(j) * (r.S_Z(j) / r.S_X(j));
      EXPECT_LT((r.Z_s.col(j) - scaled).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, scaled.cwiseAbs().maxCoeff()));
    }
    const auto again = nbt_fit(z, x, s, seed);
    EXPECT_EQ(again.Z_s, r.Z_s);
    EXPECT_EQ(again.target_rows, r.target_rows);
  }
}

TEST(NbtProperty, AllRowsAsLandmarks) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const Index m = 2 + rng.uniform_index(20);
    const Index d = m + rng.uniform_index(20);
    const MatrixXd z = oracle::gaussian_matrix(m, d, rng);
    const MatrixXd x = oracle::gaussian_matrix(m, d, rng);
    const auto r = nbt_fit(z, x, m, rng.next());
    const MatrixXd eye = MatrixXd::Identity(r.k(), r.k());
    EXPECT_LT((r.L_X.transpose() * r.L_X - eye).cwiseAbs().maxCoeff(), 1e-6);
    const double lhs = (r.X_s - r.Z_s).norm();
    EXPECT_NEAR(lhs, (r.S_X.head(r.k()) - r.S_Z.head(r.k())).norm(), 1e-8 * std::max(1.0, lhs));
    if (r.S_X.size() == r.S_Z.size()) EXPECT_NEAR(lhs, r.transfer_error, 1e-8 * std::max(1.0, lhs));
  }
}

// Rotated two-class toy: a linear rule learned in the shared basis carries
// over, one learned on the raw source does not.
TEST(NbtFit, RotationToyWithLinearSeparator) {
  const auto pair = rotated_gaussians(200, 200, 2, 40.0, 3);
  const auto norm = standard_normalize(pair.source, pair.target);
  const auto r = nbt_fit(norm.train.features, norm.test.features, 2, 5);
  const auto in_basis = oracle::LinearSeparator::fit(r.Z_s, pair.source.labels, 1);
  EXPECT_LE(in_basis.error(r.X_s, pair.target.labels, 1), 0.10);
  const auto raw = oracle::LinearSeparator::fit(pair.source.features, pair.source.labels, 1);
  EXPECT_GT(raw.error(pair.target.features, pair.target.labels, 1), 0.25);
}
