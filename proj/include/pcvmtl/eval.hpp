#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/pcvm.hpp"
#include "pcvmtl/pipelines.hpp"
#include "pcvmtl/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace pcvmtl {

struct MethodParams {
  double theta = 1.0;
  double zeta = 1.0;
  /// 0 selects the method default.
  Index landmarks = 0;
};

/// Transductive estimator: fitted on a labeled source and the unlabeled
/// target features, then asked for the target labels.
class TransferEstimator {
 public:
  virtual ~TransferEstimator() = default;
  virtual void fit(const Dataset& source, const MatrixXd& target, std::uint64_t seed) = 0;
  virtual std::vector<int> predict() const = 0;
  virtual Index model_vectors() const = 0;
};

using EstimatorFactory = std::function<std::unique_ptr<TransferEstimator>(const MethodParams&)>;

namespace methods {

/// PCVM on the normalized source, applied to the normalized target.
class PlainPcvm final : public TransferEstimator {
 public:
  PlainPcvm(const MethodParams& p, TrainConfig cfg) : spec_{KernelKind::rbf, p.theta}, cfg_(cfg) {}

  void fit(const Dataset& source, const MatrixXd& target, std::uint64_t seed) override {
    auto [zn, stats] = normalize(source);
    train_ = zn.features;
    target_ = apply_stats(target, compute_stats(target));
    auto cfg = cfg_;
    cfg.seed = seed;
    clf_ = train_classifier(gram(spec_, train_, train_), zn.labels, cfg);
  }

  std::vector<int> predict() const override {
    return one_vs_rest_predict(clf_, [&](const std::vector<Index>& idx) {
      return gram(spec_, detail::select_rows(train_, idx), target_);
    });
  }

  Index model_vectors() const override { return static_cast<Index>(clf_.model_vectors().size()); }

 private:
  KernelSpec spec_;
  TrainConfig cfg_;
  MatrixXd train_;
  MatrixXd target_;
  Classifier clf_;
};

/// Transfer kernel learning + PCVM on per-domain normalized data.
class Pctkvm final : public TransferEstimator {
 public:
  Pctkvm(const MethodParams& p, TrainConfig cfg) {
    cfg_.kernel = {KernelKind::rbf, p.theta};
    cfg_.zeta = p.zeta;
    if (p.landmarks > 0) cfg_.max_rank = p.landmarks;
    cfg_.train = cfg;
  }

  void fit(const Dataset& source, const MatrixXd& target, std::uint64_t seed) override {
    auto [zn, stats] = normalize(source);
    cfg_.train.seed = seed;
    est_ = pctkvm_fit(zn, apply_stats(target, compute_stats(target)), cfg_);
  }

  std::vector<int> predict() const override { return pctkvm_predict(est_).labels; }

  Index model_vectors() const override {
    return static_cast<Index>(est_.classifier.model_vectors().size());
  }

 private:
  PctkvmConfig cfg_;
  PctkvmEstimator est_;
};

class Ntvm final : public TransferEstimator {
 public:
  Ntvm(const MethodParams& p, TrainConfig cfg) {
    cfg_.kernel = {KernelKind::rbf, p.theta};
    cfg_.landmarks = p.landmarks;
    cfg_.train = cfg;
  }

  void fit(const Dataset& source, const MatrixXd& target, std::uint64_t seed) override {
    cfg_.seed = seed;
    cfg_.train.seed = seed;
    est_ = ntvm_fit(source, target, cfg_);
  }

  std::vector<int> predict() const override { return ntvm_predict(est_).labels; }

  Index model_vectors() const override {
    return static_cast<Index>(est_.classifier.model_vectors().size());
  }

 private:
  NtvmConfig cfg_;
  NtvmEstimator est_;
};

}  // namespace methods

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"pcvm", "pctkvm", "ntvm"};
  return names;
}

inline EstimatorFactory make_method(const std::string& name, TrainConfig cfg = {}) {
  if (name == "pcvm") {
    return [cfg](const MethodParams& p) { return std::make_unique<methods::PlainPcvm>(p, cfg); };
  }
  if (name == "pctkvm") {
    return [cfg](const MethodParams& p) { return std::make_unique<methods::Pctkvm>(p, cfg); };
  }
  if (name == "ntvm") {
    return [cfg](const MethodParams& p) { return std::make_unique<methods::Ntvm>(p, cfg); };
  }
  std::string valid;
  for (const auto& n : method_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InputError("unknown method '" + name + "' (valid: " + valid + ")");
}

inline double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw InputError("error_rate: prediction/label count mismatch");
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

/// Splits sample indices into two halves holding about half of every class
/// (per-class sizes differ by at most one). Indices within a half are sorted.
/// Retries up to 10 draws when a class would be missing from a half.
inline std::pair<std::vector<Index>, std::vector<Index>> stratified_halves(const Dataset& ds, Rng& rng) {
  std::map<int, std::vector<Index>> members;
  for (Index i = 0; i < ds.n(); ++i) members[ds.labels[static_cast<std::size_t>(i)]].push_back(i);
  for (int attempt = 0; attempt < 10; ++attempt) {
    std::vector<Index> first;
    std::vector<Index> second;
    std::size_t odd = 0;
    bool complete = true;
    for (auto [label, rows] : members) {
      rng.shuffle(rows);
      std::size_t take = rows.size() / 2;
      if (rows.size() % 2 == 1) take += (odd++ % 2 == 0) ? 1 : 0;
      if (take == 0 || take == rows.size()) complete = false;
      first.insert(first.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
      second.insert(second.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
    }
    if (!complete) continue;
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {std::move(first), std::move(second)};
  }
  throw InputError("stratified split of '" + ds.name + "': a class is absent from one half after 10 draws");
}

struct EvalRecord {
  std::string method;
  std::string pair;
  int repetition = 0;
  int fold = 0;
  double error = 0.0;
  Index model_vectors = 0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  MethodParams params;
};

struct EvalReport {
  std::vector<EvalRecord> records;

  double mean_error() const {
    double s = 0.0;
    for (const auto& r : records) s += r.error;
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
  }
  double sd_error() const {
    if (records.size() < 2) return 0.0;
    const double mu = mean_error();
    double s = 0.0;
    for (const auto& r : records) s += (r.error - mu) * (r.error - mu);
    return std::sqrt(s / static_cast<double>(records.size() - 1));
  }
};

struct CvOptions {
  std::string method = "method";
  std::string pair = "pair";
  int repetitions = 5;
};

/// Repeated two-fold transfer evaluation. Each repetition halves source and
/// target independently (stratified); fold f trains on source half f with
/// the unlabeled target half f and scores on that target half. Repetition r
/// uses seed + r.
inline EvalReport five_by_two_cv(const Dataset& source, const Dataset& target,
                                 const EstimatorFactory& factory, const MethodParams& params,
                                 std::uint64_t seed, const CvOptions& opts = {}) {
  source.validate();
  target.validate();
  if (source.d() != target.d()) throw InputError("five_by_two_cv: source and target dimensions differ");
  using clock = std::chrono::steady_clock;
  EvalReport report;
  for (int rep = 0; rep < opts.repetitions; ++rep) {
    const std::uint64_t rep_seed = seed + static_cast<std::uint64_t>(rep);
    Rng rng(rep_seed);
    const auto src = stratified_halves(source, rng);
    const auto tgt = stratified_halves(target, rng);
    for (int fold = 0; fold < 2; ++fold) {
      const Dataset train = source.subset(fold == 0 ? src.first : src.second);
      const Dataset eval = target.subset(fold == 0 ? tgt.first : tgt.second);
      auto est = factory(params);
      const auto t0 = clock::now();
      est->fit(train, eval.features, rep_seed);
      const auto t1 = clock::now();
      const auto predicted = est->predict();
      const auto t2 = clock::now();
      EvalRecord rec;
      rec.method = opts.method;
      rec.pair = opts.pair;
      rec.repetition = rep;
      rec.fold = fold;
      rec.error = error_rate(predicted, eval.labels);
      rec.model_vectors = est->model_vectors();
      rec.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
      rec.predict_seconds = std::chrono::duration<double>(t2 - t1).count();
      rec.params = params;
      report.records.push_back(std::move(rec));
    }
  }
  return report;
}

struct GridSpec {
  std::vector<double> thetas{1.0};
  std::vector<double> zetas{1.0};
  std::vector<Index> landmarks{0};

  void validate() const {
    if (thetas.empty() || zetas.empty() || landmarks.empty()) {
      throw InputError("grid: every parameter list must be non-empty");
    }
    for (double t : thetas) {
      if (!(t > 0.0)) throw InputError("grid: theta values must be positive");
    }
    for (double z : zetas) {
      if (!(z >= 1.0)) throw InputError("grid: zeta values must be >= 1");
    }
    for (Index s : landmarks) {
      if (s < 0) throw InputError("grid: landmark counts must be non-negative");
    }
  }
};

struct GridEntry {
  MethodParams params;
  double accuracy = 0.0;
  std::string failure;  // empty when the combination ran
};

struct GridResult {
  MethodParams best;
  double best_accuracy = 0.0;
  std::vector<GridEntry> entries;
};

/// Picks the combination with the best two-fold accuracy on the source alone
/// (each source half plays the unlabeled target of the other). Ties go to the
/// smaller theta, then zeta, then landmark count.
inline GridResult grid_search(const Dataset& source, GridSpec grid, const EstimatorFactory& factory,
                              std::uint64_t seed) {
  grid.validate();
  std::sort(grid.thetas.begin(), grid.thetas.end());
  std::sort(grid.zetas.begin(), grid.zetas.end());
  std::sort(grid.landmarks.begin(), grid.landmarks.end());
  Rng rng(seed);
  const auto halves = stratified_halves(source, rng);
  const Dataset a = source.subset(halves.first);
  const Dataset b = source.subset(halves.second);

  GridResult result;
  bool found = false;
  std::string causes;
  for (double theta : grid.thetas) {
    for (double zeta : grid.zetas) {
      for (Index s : grid.landmarks) {
        GridEntry entry;
        entry.params = {theta, zeta, s};
        try {
          double acc = 0.0;
          for (int fold = 0; fold < 2; ++fold) {
            const Dataset& train = fold == 0 ? a : b;
            const Dataset& held = fold == 0 ? b : a;
            auto est = factory(entry.params);
            est->fit(train, held.features, seed);
            acc += 1.0 - error_rate(est->predict(), held.labels);
          }
          entry.accuracy = acc / 2.0;
          if (!found || entry.accuracy > result.best_accuracy) {
            result.best = entry.params;
            result.best_accuracy = entry.accuracy;
            found = true;
          }
        } catch (const std::exception& e) {
          entry.failure = e.what();
          causes += "\n  theta=" + std::to_string(theta) + " zeta=" + std::to_string(zeta) +
                    " s=" + std::to_string(s) + ": " + e.what();
        }
        result.entries.push_back(std::move(entry));
      }
    }
  }
  if (!found) throw NumericalError("grid_search", "every parameter combination failed:" + causes);
  return result;
}

struct SweepRow {
  Index landmarks = 0;
  double mean_error = 0.0;
  double sd_error = 0.0;
};

/// NTVM target error per landmark count over seeded repetitions (seed + r).
inline std::vector<SweepRow> landmark_sweep(const Dataset& source, const Dataset& target,
                                            const std::vector<Index>& s_values, int repetitions,
                                            std::uint64_t seed, double theta,
                                            const TrainConfig& train = {}) {
  source.validate();
  target.validate();
  if (repetitions < 1) throw InputError("landmark_sweep: repetitions must be >= 1");
  const Index limit = std::min(target.n(), target.d());
  std::vector<SweepRow> rows;
  for (Index s : s_values) {
    if (s < 1 || s > limit) {
      throw InputError("landmark_sweep: s = " + std::to_string(s) + " outside [1, " +
                       std::to_string(limit) + "]");
    }
    std::vector<double> errors;
    for (int rep = 0; rep < repetitions; ++rep) {
      NtvmConfig cfg;
      cfg.kernel = {KernelKind::rbf, theta};
      cfg.landmarks = s;
      cfg.seed = seed + static_cast<std::uint64_t>(rep);
      cfg.train = train;
      const auto est = ntvm_fit(source, target.features, cfg);
      errors.push_back(error_rate(ntvm_predict(est).labels, target.labels));
    }
    SweepRow row;
    row.landmarks = s;
    for (double e : errors) row.mean_error += e;
    row.mean_error /= static_cast<double>(errors.size());
    if (errors.size() > 1) {
      double v = 0.0;
      for (double e : errors) v += (e - row.mean_error) * (e - row.mean_error);
      row.sd_error = std::sqrt(v / static_cast<double>(errors.size() - 1));
    }
    rows.push_back(row);
  }
  return rows;
}

struct AggregateRow {
  std::string method;
  std::string pair;
  Index records = 0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double mean_model_vectors = 0.0;
  double mean_fit_seconds = 0.0;
  double mean_predict_seconds = 0.0;
};

/// Per (method, dataset pair) means of error, model vectors and timings.
inline std::vector<AggregateRow> sparsity_and_time_report(const EvalReport& report) {
  if (report.records.empty()) throw InputError("sparsity_and_time_report: empty report");
  std::map<std::pair<std::string, std::string>, EvalReport> groups;
  for (const auto& r : report.records) groups[{r.method, r.pair}].records.push_back(r);
  std::vector<AggregateRow> out;
  for (const auto& [key, group] : groups) {
    AggregateRow row;
    row.method = key.first;
    row.pair = key.second;
    row.records = static_cast<Index>(group.records.size());
    row.mean_error = group.mean_error();
    row.sd_error = group.sd_error();
    for (const auto& r : group.records) {
      row.mean_model_vectors += static_cast<double>(r.model_vectors);
      row.mean_fit_seconds += r.fit_seconds;
      row.mean_predict_seconds += r.predict_seconds;
    }
    const auto n = static_cast<double>(row.records);
    row.mean_model_vectors /= n;
    row.mean_fit_seconds /= n;
    row.mean_predict_seconds /= n;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace pcvmtl
