#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pcvmtl;

namespace {

double training_error_plain(const Dataset& ds, double theta) {
  const auto norm = normalize(ds).first;
  const auto model = pcvm_fit(norm, {KernelKind::rbf, theta});
  return error_rate(pcvm_predict(model, norm).labels, ds.labels);
}

int poisson(double rate, Rng& rng) {
  const double limit = std::exp(-rate);
  double p = rng.uniform();
  int k = 0;
  while (p > limit) {
    p *= rng.uniform();
    ++k;
  }
  return k;
}

// Word-count style features: each class prefers its own half of the
// vocabulary; `shift` moves rate mass between domains.
Dataset text_like(Index per_class, Index d, double shift, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features = MatrixXd::Zero(2 * per_class, d);
  for (Index i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    for (Index j = 0; j < d; ++j) {
      const bool own = (j < d / 2) == (c == 0);
      const double rate = (own ? 1.2 : 0.3) * (j % 3 == 0 ? 1.0 + shift : 1.0);
      ds.features(i, j) = std::log1p(poisson(rate, rng));
    }
    ds.labels.push_back(c);
  }
  return ds;
}

}  // namespace

TEST(Pctkvm, SelfTransferTracksPlainPcvm) {
  const auto ds = two_gaussians(40, 2, 1.0, 0.8, 4);
  const auto norm = normalize(ds).first;
  PctkvmConfig cfg;
  cfg.kernel = {KernelKind::rbf, 1.0};
  const auto est = pctkvm_fit(norm, norm.features, cfg);
  const double transfer_error = error_rate(pctkvm_predict(est).labels, ds.labels);
  EXPECT_NEAR(transfer_error, training_error_plain(ds, 1.0), 0.02);
}

TEST(Pctkvm, SingleClassRejected) {
  Dataset z{MatrixXd::Random(6, 2), std::vector<int>(6, 1), "z"};
  EXPECT_THROW(pctkvm_fit(z, MatrixXd::Random(5, 2), {}), InputError);
}

TEST(Pctkvm, SparseOnTextLikeShift) {
  const auto z = text_like(100, 30, 0.0, 1);
  const auto x = text_like(100, 30, 0.8, 2);
  const auto zn = normalize(z).first;
  const MatrixXd xn = normalize(x).first.features;
  PctkvmConfig cfg;
  cfg.kernel = {KernelKind::rbf, 8.0};
  const auto est = pctkvm_fit(zn, xn, cfg);
  const auto mv = static_cast<double>(est.classifier.model_vectors().size());
  EXPECT_GE(mv, 1.0);
  EXPECT_LE(mv / static_cast<double>(z.n()), 0.2);
  EXPECT_LT(error_rate(pctkvm_predict(est).labels, x.labels), 0.5);
}

TEST(Pctkvm, RetainedRowsMatchFullProduct) {
  const auto ds = two_gaussians(20, 2, 1.0, 0.8, 9);
  PctkvmConfig cfg;
  cfg.kernel = {KernelKind::rbf, 1.0};
  const auto est = pctkvm_fit(ds, ds.features.array() + 0.3, cfg);
  const auto& m = est.classifier.models.front();
  const MatrixXd full = est.transfer.K_bar_XZ.transpose();
  EXPECT_EQ(decision_values(m, retained_rows(m, full)), decision_values_full(m, full));
}

TEST(Pctkvm, ZeroModelPredictsPositiveBoundary) {
  PctkvmEstimator est;
  est.transfer.K_bar_XZ = MatrixXd::Ones(3, 4);
  PcvmModel m;
  m.training_size = 4;
  m.label_map = {0, 1};
  est.classifier = {{0, 1}, {m}};
  const auto pred = pctkvm_predict(est);
  EXPECT_EQ(pred.labels, (std::vector<int>{1, 1, 1}));
  for (Index j = 0; j < 3; ++j) EXPECT_EQ(pred.probabilities(j), 0.5);
}

TEST(Ntvm, SelfTransferTracksPlainPcvm) {
  const auto ds = two_gaussians(40, 2, 1.0, 0.8, 4);
  NtvmConfig cfg;
  cfg.kernel = {KernelKind::rbf, 1.0};
  const auto est = ntvm_fit(ds, ds.features, cfg);
  const double err = error_rate(ntvm_predict(est).labels, ds.labels);
  EXPECT_NEAR(err, training_error_plain(ds, 1.0), 0.02);
  EXPECT_GE(1.0 - err, 0.98);
}

TEST(Ntvm, RotatedToyBeatsPlainPcvm) {
  const auto pair = rotated_gaussians(200, 200, 20, 40.0, 1);
  const MethodParams params{5.0, 1.0, 0};
  auto ntvm = make_method("ntvm")(params);
  ntvm->fit(pair.source, pair.target.features, 3);
  EXPECT_LE(error_rate(ntvm->predict(), pair.target.labels), 0.10);
  auto plain = make_method("pcvm")(params);
  plain->fit(pair.source, pair.target.features, 3);
  EXPECT_GE(error_rate(plain->predict(), pair.target.labels), 0.25);
}

TEST(Ntvm, AugmentsToTargetSize) {
  const auto pair = rotated_gaussians(60, 80, 5, 10.0, 2);
  NtvmConfig cfg;
  cfg.kernel = {KernelKind::rbf, 2.0};
  const auto grow = ntvm_fit(pair.source, pair.target.features, cfg);
  EXPECT_EQ(grow.augmentation.added, 20);
  EXPECT_EQ(static_cast<Index>(ntvm_predict(grow).labels.size()), 80);
  const auto shrink = ntvm_fit(pair.target, pair.source.features, cfg);
  EXPECT_EQ(shrink.augmentation.removed, 20);
}

TEST(Ntvm, DeterministicAndLabelMapped) {
  auto ds = two_gaussians(25, 3, 1.0, 0.8, 5);
  for (auto& l : ds.labels) l = l == 0 ? 3 : 7;
  NtvmConfig cfg;
  cfg.kernel = {KernelKind::rbf, 1.5};
  cfg.seed = 77;
  const MatrixXd x = ds.features.array() * 1.1;
  const auto a = ntvm_predict(ntvm_fit(ds, x, cfg));
  const auto b = ntvm_predict(ntvm_fit(ds, x, cfg));
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.probabilities, b.probabilities);
  for (int v : a.labels) EXPECT_TRUE(v == 3 || v == 7);
}

TEST(Ntvm, Errors) {
  Dataset z{MatrixXd::Random(6, 2), {0, 0, 0, 1, 1, 1}, "z"};
  EXPECT_THROW(ntvm_fit(z, MatrixXd::Random(6, 3), {}), InputError);
}
