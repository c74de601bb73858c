#pragma once

#include "pcvmtl/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pcvmtl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Labeled sample matrix: one row per sample, integer class ids.
struct Dataset {
  MatrixXd features;
  std::vector<int> labels;
  std::string name;

  Index n() const { return features.rows(); }
  Index d() const { return features.cols(); }

  /// Sorted distinct labels.
  std::vector<int> label_set() const {
    std::set<int> s(labels.begin(), labels.end());
    return {s.begin(), s.end()};
  }

  /// Samples per class, keyed by label.
  std::map<int, Index> class_counts() const {
    std::map<int, Index> counts;
    for (int y : labels) ++counts[y];
    return counts;
  }

  void validate() const {
    if (features.rows() == 0) throw InputError("dataset '" + name + "': no samples");
    if (features.cols() == 0) throw InputError("dataset '" + name + "': no features");
    if (static_cast<Index>(labels.size()) != features.rows()) {
      throw InputError("dataset '" + name + "': " + std::to_string(labels.size()) +
                       " labels for " + std::to_string(features.rows()) + " rows");
    }
  }

  /// Rows at `indices`, in the given order.
  Dataset subset(const std::vector<Index>& indices) const {
    Dataset out;
    out.name = name;
    out.features.resize(static_cast<Index>(indices.size()), d());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      out.features.row(static_cast<Index>(i)) = features.row(indices[i]);
      out.labels.push_back(labels[static_cast<std::size_t>(indices[i])]);
    }
    return out;
  }
};

/// Per-feature moments of one domain. Stored deviations are strictly positive.
struct NormalizationStats {
  VectorXd mean;
  VectorXd sd;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec == std::errc() && ptr == end) return value;
  // Accept integral reals such as "1.0".
  const auto real = parse_double(s);
  if (real && std::isfinite(*real) && std::floor(*real) == *real) {
    return static_cast<long long>(*real);
  }
  return std::nullopt;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  return in;
}

inline std::string file_stem(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

}  // namespace detail

/// Reads a comma-separated file with one sample per line. The label sits in
/// `label_column`; every other column is a feature. Blank lines are skipped.
inline Dataset load_dense_csv(const std::string& path, Index label_column = 0,
                              bool skip_header = false) {
  auto in = detail::open_input(path);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    const auto content = detail::trim(line);
    if (content.empty()) continue;

    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = content.find(',', start);
      cells.push_back(content.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const std::string where = path + ": row " + std::to_string(line_no);
    if (width == 0) {
      width = cells.size();
      if (label_column < 0 || static_cast<std::size_t>(label_column) >= width) {
        throw InputError(where + ": label column " + std::to_string(label_column) +
                         " out of range for " + std::to_string(width) + " columns");
      }
      if (width < 2) throw InputError(where + ": need a label and at least one feature");
    } else if (cells.size() != width) {
      throw InputError(where + ": ragged row with " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(width));
    }

    std::vector<double> row;
    row.reserve(width - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (static_cast<Index>(c) == label_column) {
        const auto y = detail::parse_integer(cells[c]);
        if (!y) {
          throw InputError(where + ": label '" + std::string(cells[c]) +
                           "' is not an integer");
        }
        labels.push_back(static_cast<int>(*y));
      } else {
        const auto v = detail::parse_double(cells[c]);
        if (!v) {
          throw InputError(where + ", column " + std::to_string(c) + ": non-numeric cell '" +
                           std::string(cells[c]) + "'");
        }
        row.push_back(*v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no samples");

  Dataset ds;
  ds.name = detail::file_stem(path);
  ds.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

/// Reads "label idx:val idx:val ..." lines with 1-based, strictly increasing
/// indices. Absent entries are zero. The feature count is the largest index
/// seen unless `dimension` is given.
inline Dataset load_sparse(const std::string& path, std::optional<Index> dimension = {}) {
  auto in = detail::open_input(path);
  struct Entry {
    Index row;
    Index col;
    double value;
  };
  std::vector<Entry> entries;
  std::vector<int> labels;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto content = detail::trim(line);
    if (const auto hash = content.find('#'); hash != std::string_view::npos) {
      content = detail::trim(content.substr(0, hash));
    }
    if (content.empty()) continue;
    const std::string where = path + ": line " + std::to_string(line_no);

    std::istringstream tokens{std::string(content)};
    std::string token;
    tokens >> token;
    const auto y = detail::parse_integer(token);
    if (!y) throw InputError(where + ": label '" + token + "' is not an integer");
    const auto row = static_cast<Index>(labels.size());
    labels.push_back(static_cast<int>(*y));

    Index previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw InputError(where + ": malformed pair '" + token + "'");
      }
      const auto idx = detail::parse_integer(std::string_view(token).substr(0, colon));
      const auto val = detail::parse_double(std::string_view(token).substr(colon + 1));
      if (!idx || !val) throw InputError(where + ": malformed pair '" + token + "'");
      if (*idx < 1) throw InputError(where + ": index " + std::to_string(*idx) + " < 1");
      if (*idx <= previous) {
        throw InputError(where + ": index " + std::to_string(*idx) +
                         " is not strictly increasing (previous " +
                         std::to_string(previous) + ")");
      }
      previous = static_cast<Index>(*idx);
      max_index = std::max(max_index, previous);
      entries.push_back({row, previous - 1, *val});
    }
  }
  if (labels.empty()) throw InputError(path + ": no samples");
  Index d = max_index;
  if (dimension) {
    if (*dimension < max_index) {
      throw InputError(path + ": index " + std::to_string(max_index) +
                       " exceeds declared dimension " + std::to_string(*dimension));
    }
    d = *dimension;
  }
  if (d == 0) throw InputError(path + ": no features");

  Dataset ds;
  ds.name = detail::file_stem(path);
  ds.features = MatrixXd::Zero(static_cast<Index>(labels.size()), d);
  for (const auto& e : entries) ds.features(e.row, e.col) = e.value;
  ds.labels = std::move(labels);
  return ds;
}

/// Column means and population standard deviations; zero-variance columns
/// store sd = 1.
inline NormalizationStats compute_stats(const MatrixXd& x) {
  NormalizationStats stats;
  const double n = static_cast<double>(x.rows());
  stats.mean = x.colwise().mean().transpose();
  stats.sd.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - stats.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    // Relative test so round-off in a constant column is not mistaken for spread.
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(stats.mean(j))));
    stats.sd(j) = constant ? 1.0 : sd;
  }
  return stats;
}

inline MatrixXd apply_stats(const MatrixXd& x, const NormalizationStats& stats) {
  return (x.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.sd.transpose().array();
}

/// Shifts and scales one dataset to zero mean and unit variance per feature.
inline std::pair<Dataset, NormalizationStats> normalize(const Dataset& ds) {
  auto stats = compute_stats(ds.features);
  Dataset out = ds;
  out.features = apply_stats(ds.features, stats);
  return {std::move(out), std::move(stats)};
}

struct NormalizedPair {
  Dataset train;
  Dataset test;
  NormalizationStats train_stats;
  NormalizationStats test_stats;
};

/// Normalizes each domain with its own statistics.
inline NormalizedPair standard_normalize(const Dataset& train, const Dataset& test) {
  if (train.d() != test.d()) {
    throw InputError("standard_normalize: dimension mismatch (" + std::to_string(train.d()) +
                     " vs " + std::to_string(test.d()) + ")");
  }
  auto [tr, trs] = normalize(train);
  auto [te, tes] = normalize(test);
  return {std::move(tr), std::move(te), std::move(trs), std::move(tes)};
}

}  // namespace pcvmtl
