#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "logitlab/csv.hpp"
#include "logitlab/dgp.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

/// How to read an external binary-choice table: which column is the 0/1
/// label, which are features, and which of those expand one-hot.
struct TabularSchema {
  std::string label;
  std::vector<std::string> features;
  std::vector<std::string> categorical;
  double test_fraction = 0.10;

  void validate() const {
    if (label.empty()) throw std::invalid_argument("schema: label column required");
    if (features.empty()) throw std::invalid_argument("schema: no feature columns");
    std::set<std::string> seen;
    for (const auto& f : features) {
      if (!seen.insert(f).second) {
        throw std::invalid_argument("schema: duplicated feature column " + f);
      }
    }
    for (const auto& c : categorical) {
      if (!seen.count(c)) {
        throw std::invalid_argument("schema: categorical column " + c +
                                    " is not a feature");
      }
    }
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
      throw std::invalid_argument("schema: test_fraction must lie in [0,1)");
    }
  }
};

struct TabularSplit {
  Dataset train;
  Dataset test;
  std::vector<std::string> columns;  // expanded feature names, in X order
};

namespace detail {
inline double parse_cell(const std::string& cell, const std::string& col, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("unparseable value '" + cell + "' in column " + col +
                                " at data row " + std::to_string(row + 1));
  }
}
}  // namespace detail

/// Loads a CSV of binary choices: one-hot expands categorical columns
/// (levels sorted, one indicator per level), standardizes continuous
/// columns with train-split statistics, and splits train/test by a
/// seed-deterministic shuffle.
inline TabularSplit load_tabular(const std::string& path, const TabularSchema& schema,
                                 std::uint64_t seed) {
  schema.validate();
  const CsvTable table = read_csv(path);
  const std::size_t n = table.rows.size();
  if (n < 2) throw std::invalid_argument("load_tabular: need at least 2 data rows");

  const int label_col = table.column(schema.label);
  if (label_col < 0) throw std::invalid_argument("missing label column " + schema.label);
  std::vector<int> feat_cols;
  for (const auto& f : schema.features) {
    const int c = table.column(f);
    if (c < 0) throw std::invalid_argument("missing feature column " + f);
    feat_cols.push_back(c);
  }
  const std::set<std::string> cat(schema.categorical.begin(), schema.categorical.end());

  // labels
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cell = table.rows[i][label_col];
    if (cell == "0") {
      y[i] = 0;
    } else if (cell == "1") {
      y[i] = 1;
    } else {
      throw std::invalid_argument("label column " + schema.label +
                                  " is not binary at data row " + std::to_string(i + 1) +
                                  ": '" + cell + "'");
    }
  }

  // expanded design: categorical levels discovered from the whole file so
  // the column set does not depend on the split
  std::vector<std::string> columns;
  std::vector<std::vector<double>> design;  // column-major
  std::vector<bool> continuous;
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    const int c = feat_cols[f];
    const std::string& name = schema.features[f];
    if (cat.count(name)) {
      std::set<std::string> levels;
      for (const auto& row : table.rows) levels.insert(row[c]);
      for (const auto& level : levels) {
        columns.push_back(name + "=" + level);
        continuous.push_back(false);
        auto& col = design.emplace_back(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) col[i] = table.rows[i][c] == level ? 1.0 : 0.0;
      }
    } else {
      columns.push_back(name);
      continuous.push_back(true);
      auto& col = design.emplace_back(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        col[i] = detail::parse_cell(table.rows[i][c], name, i);
      }
    }
  }

  // seed-deterministic shuffled split
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed, 0x7461625fULL);
  rng.shuffle(order);
  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(schema.test_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_test;
  if (n_train < 1) throw std::invalid_argument("load_tabular: empty train split");

  // train-split standardization of continuous columns
  for (std::size_t j = 0; j < design.size(); ++j) {
    if (!continuous[j]) continue;
    auto& col = design[j];
    double mean = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) mean += col[order[i]];
    mean /= static_cast<double>(n_train);
    double var = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) {
      const double dv = col[order[i]] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n_train);
    const double sd = std::sqrt(var);
    for (double& v : col) v = sd > 1e-12 ? (v - mean) / sd : v - mean;
  }

  auto take = [&](std::size_t begin, std::size_t count) {
    Dataset ds;
    ds.X = Matrix(count, design.size());
    ds.y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t src = order[begin + i];
      ds.y[i] = y[src];
      for (std::size_t j = 0; j < design.size(); ++j) ds.X(i, j) = design[j][src];
    }
    return ds;
  };

  TabularSplit split;
  split.columns = std::move(columns);
  split.train = take(0, n_train);
  if (n_test > 0) split.test = take(n_train, n_test);
  return split;
}

}  // namespace logitlab
