#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pcvmtl;

namespace {

// 1-D classes at -3 (label 0) and +3 (label 1), sd 0.5.
Dataset one_d_classes(Index per_class, std::uint64_t seed) { return two_gaussians(per_class, 1, 3.0, 0.5, seed); }

std::vector<int> internal_labels(const Dataset& ds) {
  std::vector<int> y;
  for (int v : ds.labels) y.push_back(v == 1 ? 1 : -1);
  return y;
}

}  // namespace

TEST(Probit, ReferenceValues) {
  EXPECT_EQ(probit(0.0), 0.5);
  EXPECT_NEAR(probit(1.6449), 0.95, 1e-4);
  EXPECT_NEAR(probit(1.6449), oracle::normal_cdf(1.6449), 1e-7);
}

TEST(Probit, AgreesWithQuadrature) {
  for (double x = -6.0; x <= 6.0; x += 0.37) EXPECT_NEAR(probit(x), oracle::normal_cdf(x), 1e-7) << x;
}

TEST(Probit, SymmetryIdentity) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double x = 8.0 * rng.normal();
    EXPECT_NEAR(probit(-x) + probit(x), 1.0, 1e-12);
  }
}

TEST(InverseMills, ContinuousAcrossTailSwitch) {
  EXPECT_NEAR(inverse_mills(-35.0 + 1e-9), inverse_mills(-35.0 - 1e-9), 1e-6);
  for (double z = -5.0; z <= 5.0; z += 0.5) {
    EXPECT_NEAR(inverse_mills(z), normal_pdf(z) / oracle::normal_cdf(z), 1e-6 * std::max(1.0, -z));
  }
  EXPECT_TRUE(std::isfinite(inverse_mills(-1e4)));
}

TEST(PcvmTrain, SeparatedOneDimensionalClasses) {
  const auto ds = one_d_classes(50, 3);
  const KernelSpec spec{KernelKind::rbf, 1.0};
  const MatrixXd k = gram(spec, ds.features, ds.features);
  const auto model = pcvm_train(k, internal_labels(ds));
  const auto pred = pcvm_predict(model, retained_rows(model, k));
  int wrong = 0;
  const auto y = internal_labels(ds);
  for (std::size_t i = 0; i < y.size(); ++i) wrong += pred.labels[i] != y[i] ? 1 : 0;
  EXPECT_LE(wrong, 2);
  EXPECT_LE(model.size(), 15);
  EXPECT_GE(model.size(), 1);
}

TEST(PcvmTrain, OneSamplePerClass) {
  const MatrixXd x = (MatrixXd(2, 1) << -1.0, 1.0).finished();
  for (double theta : {0.3, 1.0, 5.0}) {
    const MatrixXd k = gram({KernelKind::rbf, theta}, x, x);
    const auto model = pcvm_train(k, {-1, 1});
    const auto pred = pcvm_predict(model, retained_rows(model, k));
    EXPECT_EQ(pred.labels, (std::vector<int>{-1, 1})) << theta;
  }
}

TEST(PcvmTrain, Errors) {
  const MatrixXd k = MatrixXd::Identity(3, 3);
  try {
    pcvm_train(k, {1, 1, 1});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("single-class input"), std::string::npos);
  }
  EXPECT_THROW(pcvm_train(MatrixXd::Identity(3, 2), {1, -1, 1}), InputError);
  MatrixXd bad = k;
  bad(0, 1) = std::nan("");
  EXPECT_THROW(pcvm_train(bad, {1, -1, 1}), InputError);
  EXPECT_THROW(pcvm_train(k, {1, -1}), InputError);
  EXPECT_THROW(pcvm_train(k, {1, 0, -1}), InputError);
  TrainConfig cfg;
  cfg.max_iterations = 0;
  EXPECT_THROW(pcvm_train(k, {1, -1, 1}, cfg), InputError);
}

TEST(PcvmPredict, BoundaryAndClosedForm) {
  PcvmModel m;
  m.training_size = 4;
  const auto zero = pcvm_predict(m, MatrixXd(0, 3));
  for (int v : zero.labels) EXPECT_EQ(v, 1);
  for (Index j = 0; j < 3; ++j) EXPECT_EQ(zero.probabilities(j), 0.5);

  m.bias = -1.0;
  const auto neg = pcvm_predict(m, MatrixXd(0, 2));
  for (int v : neg.labels) EXPECT_EQ(v, -1);
  EXPECT_NEAR(neg.probabilities(0), 0.158655253931, 1e-10);

  EXPECT_THROW(pcvm_predict(m, MatrixXd(2, 2)), InputError);
}

TEST(PcvmPredict, HeldOutPoint) {
  const auto model = pcvm_fit(one_d_classes(50, 3), {KernelKind::rbf, 1.0});
  Dataset probe{MatrixXd::Constant(1, 1, 3.0), {1}, "probe"};
  const auto pred = pcvm_predict(model, probe);
  EXPECT_EQ(pred.labels[0], 1);
  EXPECT_GT(pred.probabilities(0), 0.9);
}

TEST(PcvmProperty, SparsityProbabilityAndFullKernelIdentity) {
  Rng rng(17);
  for (int trial = 0; trial < 15; ++trial) {
    const Index per = 5 + rng.uniform_index(30);
    const Index d = 1 + rng.uniform_index(4);
    const auto ds = two_gaussians(per, d, 0.5 + rng.uniform(), 0.5 + rng.uniform(), rng.next());
    const double theta = 0.5 + 2.0 * rng.uniform();
    const MatrixXd k = gram({KernelKind::rbf, theta}, ds.features, ds.features);
    const auto model = pcvm_train(k, internal_labels(ds));

    for (std::size_t i = 1; i < model.basis_trace.size(); ++i) {
      EXPECT_LE(model.basis_trace[i], model.basis_trace[i - 1]);
    }
    EXPECT_LE(model.size(), ds.n());
    std::set<Index> distinct(model.retained_indices.begin(), model.retained_indices.end());
    EXPECT_EQ(static_cast<Index>(distinct.size()), model.size());
    for (Index i = 0; i < model.size(); ++i) EXPECT_NE(model.weights(i), 0.0);

    const MatrixXd test = oracle::gaussian_matrix(20, d, rng);
    const MatrixXd k_test = gram({KernelKind::rbf, theta}, ds.features, test);
    EXPECT_EQ(decision_values(model, retained_rows(model, k_test)), decision_values_full(model, k_test));

    const auto pred = pcvm_predict(model, retained_rows(model, k_test));
    for (Index j = 0; j < test.rows(); ++j) {
      EXPECT_EQ(pred.labels[static_cast<std::size_t>(j)] == 1, pred.probabilities(j) >= 0.5);
      EXPECT_GE(pred.probabilities(j), 0.0);
      EXPECT_LE(pred.probabilities(j), 1.0);
    }
  }
}

TEST(PcvmProperty, PermutationInvariance) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = two_gaussians(15, 2, 1.0, 0.6, rng.next());
    const KernelSpec spec{KernelKind::rbf, 1.2};
    const MatrixXd k = gram(spec, ds.features, ds.features);
    const auto y = internal_labels(ds);
    std::vector<Index> perm(static_cast<std::size_t>(ds.n()));
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm);
    MatrixXd kp(ds.n(), ds.n());
    std::vector<int> yp(y.size());
    MatrixXd xp(ds.n(), ds.d());
    for (Index i = 0; i < ds.n(); ++i) {
      xp.row(i) = ds.features.row(perm[static_cast<std::size_t>(i)]);
      yp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      for (Index j = 0; j < ds.n(); ++j) kp(i, j) = k(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    const MatrixXd test = oracle::gaussian_matrix(10, 2, rng);
    const auto a = decision_values_full(pcvm_train(k, y), gram(spec, ds.features, test));
    const auto b = decision_values_full(pcvm_train(kp, yp), gram(spec, xp, test));
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(OneVsRest, TwoClassesMatchBinaryPath) {
  const auto ds = one_d_classes(20, 5);
  const KernelSpec spec{KernelKind::rbf, 1.0};
  const MatrixXd k = gram(spec, ds.features, ds.features);
  const auto clf = train_classifier(k, ds.labels);
  ASSERT_TRUE(clf.binary());
  const MatrixXd test = (MatrixXd(5, 1) << -3, -1, 0, 1, 3).finished();
  const auto via_ovr = one_vs_rest_predict(clf, [&](const std::vector<Index>& idx) {
    MatrixXd rows(static_cast<Index>(idx.size()), 1);
    for (std::size_t i = 0; i < idx.size(); ++i) rows.row(static_cast<Index>(i)) = ds.features.row(idx[i]);
    return gram(spec, rows, test);
  });
  const auto model = pcvm_fit(ds, spec);
  EXPECT_EQ(via_ovr, pcvm_predict(model, Dataset{test, std::vector<int>(5, 0), "t"}).labels);
}

TEST(OneVsRest, ThreeSeparatedClasses) {
  auto draw = [](std::uint64_t seed) {
    Rng rng(seed);
    const double centers[3][2] = {{0, 4}, {-4, -2}, {4, -2}};
    Dataset ds;
    ds.features.resize(90, 2);
    for (Index i = 0; i < 90; ++i) {
      const int c = static_cast<int>(i / 30);
      ds.features(i, 0) = centers[c][0] + rng.normal();
      ds.features(i, 1) = centers[c][1] + rng.normal();
      ds.labels.push_back(c + 10);
    }
    return ds;
  };
  const auto train = draw(1);
  const auto test = draw(2);
  const KernelSpec spec{KernelKind::rbf, 2.0};
  const auto clf = train_classifier(gram(spec, train.features, train.features), train.labels);
  ASSERT_EQ(clf.models.size(), 3u);
  const auto pred = one_vs_rest_predict(clf, [&](const std::vector<Index>& idx) {
    MatrixXd rows(static_cast<Index>(idx.size()), 2);
    for (std::size_t i = 0; i < idx.size(); ++i) rows.row(static_cast<Index>(i)) = train.features.row(idx[i]);
    return gram(spec, rows, test.features);
  });
  int wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != test.labels[i] ? 1 : 0;
  EXPECT_LE(wrong / 90.0, 0.05);
}

TEST(OneVsRest, Errors) {
  const MatrixXd k = MatrixXd::Identity(4, 4);
  EXPECT_THROW(one_vs_rest_train(k, {1, 1, 2, 2}, {1, 2, 3}), InputError);
  EXPECT_THROW(one_vs_rest_train(k, {1, 1, 1, 1}, {}), InputError);
  EXPECT_THROW(pcvm_fit(Dataset{MatrixXd::Zero(3, 1), {0, 1, 2}, "t"}, {}), InputError);
}
