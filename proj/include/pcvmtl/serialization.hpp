#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/eval.hpp"
#include "pcvmtl/kernel.hpp"
#include "pcvmtl/pcvm.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace pcvmtl {

using json = nlohmann::ordered_json;

namespace detail {

inline json matrix_rows(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd rows_matrix(const json& rows) {
  if (!rows.is_array()) throw InputError("expected an array of rows");
  if (rows.empty()) return MatrixXd(0, 0);
  const auto cols = static_cast<Index>(rows.front().size());
  MatrixXd m(static_cast<Index>(rows.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) throw InputError("ragged matrix in JSON document");
    for (Index j = 0; j < cols; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

/// Fixed-point text so CSV output does not depend on stream state.
inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline json to_json(const PcvmModel& m) {
  json w = json::array();
  for (Index i = 0; i < m.weights.size(); ++i) w.push_back(m.weights(i));
  return json{
      {"weights", w},
      {"bias", m.bias},
      {"retained_indices", m.retained_indices},
      {"kernel", {{"kind", to_string(m.kernel.kind)}, {"theta", m.kernel.theta}}},
      {"basis_points", detail::matrix_rows(m.basis_points)},
      {"label_map", {{"negative", m.label_map.negative}, {"positive", m.label_map.positive}}},
      {"training_size", m.training_size},
      {"iterations", m.iterations},
  };
}

inline PcvmModel pcvm_model_from_json(const json& j) {
  try {
    PcvmModel m;
    const auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const VectorXd>(w.data(), static_cast<Index>(w.size()));
    m.bias = j.at("bias").get<double>();
    m.retained_indices = j.at("retained_indices").get<std::vector<Index>>();
    if (j.at("kernel").at("kind").get<std::string>() != "rbf") {
      throw InputError("unsupported kernel kind in model document");
    }
    m.kernel = {KernelKind::rbf, j.at("kernel").at("theta").get<double>()};
    m.basis_points = detail::rows_matrix(j.at("basis_points"));
    m.label_map = {j.at("label_map").at("negative").get<int>(),
                   j.at("label_map").at("positive").get<int>()};
    m.training_size = j.at("training_size").get<Index>();
    m.iterations = j.at("iterations").get<int>();
    if (static_cast<Index>(m.retained_indices.size()) != m.weights.size()) {
      throw InputError("model document: weights and retained_indices differ in length");
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

inline json to_json(const Classifier& c) {
  json models = json::array();
  for (const auto& m : c.models) models.push_back(to_json(m));
  return json{{"classes", c.classes}, {"models", models}};
}

inline json to_json(const MethodParams& p) {
  return json{{"theta", p.theta}, {"zeta", p.zeta}, {"landmarks", p.landmarks}};
}

/// Full records without wall-clock fields, which go to the timings table so
/// that the report is reproducible byte for byte.
inline json to_json(const EvalReport& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"method", rec.method},
                       {"pair", rec.pair},
                       {"repetition", rec.repetition},
                       {"fold", rec.fold},
                       {"error", rec.error},
                       {"model_vectors", rec.model_vectors},
                       {"params", to_json(rec.params)}});
  }
  json aggregates = json::array();
  if (!r.records.empty()) {
    for (const auto& a : sparsity_and_time_report(r)) {
      aggregates.push_back({{"method", a.method},
                            {"pair", a.pair},
                            {"records", a.records},
                            {"mean_error", a.mean_error},
                            {"sd_error", a.sd_error},
                            {"mean_model_vectors", a.mean_model_vectors}});
    }
  }
  return json{{"records", records}, {"aggregates", aggregates}};
}

inline void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "method,pair,records,mean_error,sd_error,mean_error_percent,mean_model_vectors\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.pair << ',' << r.records << ',' << detail::fixed(r.mean_error) << ','
        << detail::fixed(r.sd_error) << ',' << detail::fixed(100.0 * r.mean_error, 2) << ','
        << detail::fixed(r.mean_model_vectors, 2) << '\n';
  }
}

inline void write_timings_csv(std::ostream& out, const EvalReport& report) {
  out << "method,pair,repetition,fold,fit_seconds,predict_seconds\n";
  for (const auto& r : report.records) {
    out << r.method << ',' << r.pair << ',' << r.repetition << ',' << r.fold << ','
        << detail::fixed(r.fit_seconds) << ',' << detail::fixed(r.predict_seconds) << '\n';
  }
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "s,mean_error,sd_error\n";
  for (const auto& r : rows) {
    out << r.landmarks << ',' << detail::fixed(r.mean_error) << ',' << detail::fixed(r.sd_error) << '\n';
  }
}

/// Dense CSV with the label in the first column, readable by load_dense_csv.
inline void write_dense_csv(std::ostream& out, const Dataset& ds) {
  for (Index i = 0; i < ds.n(); ++i) {
    out << ds.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < ds.d(); ++j) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

}  // namespace pcvmtl
