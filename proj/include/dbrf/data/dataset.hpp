#pragma once

#include "dbrf/core/common.hpp"
#include "dbrf/data/csv.hpp"

#include <fstream>
#include <optional>
#include <sstream>

namespace dbrf {

using Bits = std::vector<std::uint8_t>;
using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class ColumnKind { continuous, onehot };

/// Feature matrix (rows are examples) with sensitive bits and labels.
struct TabularDataset {
  Matrix features;  // n x d
  std::vector<std::string> feature_names;
  std::vector<ColumnKind> column_kinds;
  BitMatrix sensitive;  // n x k
  std::vector<std::string> sensitive_names;
  Bits observed_labels;
  std::optional<Bits> ideal_labels;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t sensitive_count() const { return static_cast<std::size_t>(sensitive.cols()); }

  std::vector<bool> onehot_mask() const {
    std::vector<bool> m;
    for (auto k : column_kinds) m.push_back(k == ColumnKind::onehot);
    return m;
  }

  void validate() const {
    const auto n = rows();
    require(static_cast<std::size_t>(sensitive.rows()) == n, "dataset: sensitive row count differs from features");
    require(observed_labels.size() == n, "dataset: label count differs from features");
    require(column_kinds.size() == cols(), "dataset: one column kind per feature required");
    require(feature_names.size() == cols(), "dataset: one name per feature required");
    require(sensitive_names.size() == sensitive_count(), "dataset: one name per sensitive bit required");
    require(sensitive.size() == 0 || sensitive.maxCoeff() <= 1, "dataset: sensitive entries must be bits");
    for (auto y : observed_labels) require(y <= 1, "dataset: labels must be bits");
    if (ideal_labels) {
      require(ideal_labels->size() == n, "dataset: ideal label count differs from features");
      for (auto y : *ideal_labels) require(y <= 1, "dataset: ideal labels must be bits");
    }
    require(features.allFinite(), "dataset: non-finite feature value");
  }
};

/// Protected-group indicator. `column` selects one sensitive bit; nullopt
/// takes the conjunction of all bits (the multi-attribute protected group).
inline Bits group_bits(const TabularDataset& data, std::optional<std::size_t> column = std::nullopt) {
  Bits g(data.rows(), 1);
  if (column) {
    require(*column < data.sensitive_count(), "group column out of range");
    for (std::size_t i = 0; i < data.rows(); ++i) g[i] = data.sensitive(static_cast<Index>(i), static_cast<Index>(*column));
    return g;
  }
  for (std::size_t i = 0; i < data.rows(); ++i)
    for (Index c = 0; c < data.sensitive.cols(); ++c) g[i] &= data.sensitive(static_cast<Index>(i), c);
  return g;
}

inline TabularDataset select_rows(const TabularDataset& data, const std::vector<std::size_t>& idx) {
  TabularDataset out;
  out.feature_names = data.feature_names;
  out.column_kinds = data.column_kinds;
  out.sensitive_names = data.sensitive_names;
  out.features.resize(static_cast<Index>(idx.size()), data.features.cols());
  out.sensitive.resize(static_cast<Index>(idx.size()), data.sensitive.cols());
  out.observed_labels.resize(idx.size());
  if (data.ideal_labels) out.ideal_labels = Bits(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = idx[r];
    require(src < data.rows(), "select_rows: index out of range");
    out.features.row(static_cast<Index>(r)) = data.features.row(static_cast<Index>(src));
    out.sensitive.row(static_cast<Index>(r)) = data.sensitive.row(static_cast<Index>(src));
    out.observed_labels[r] = data.observed_labels[src];
    if (data.ideal_labels) (*out.ideal_labels)[r] = (*data.ideal_labels)[src];
  }
  return out;
}

/// Copy that cannot leak ideal labels into a training routine.
inline TabularDataset without_ideal_labels(TabularDataset data) {
  data.ideal_labels.reset();
  return data;
}

/// Labels to evaluate against: ideal when known, observed otherwise.
inline const Bits& evaluation_labels(const TabularDataset& data) {
  return data.ideal_labels ? *data.ideal_labels : data.observed_labels;
}

// Canonical dump: feature columns, then __y, __ym, __a0.. . One-hot columns
// are recognised on reload by an '=' in their name ("column=value").
inline void write_dataset_csv(const TabularDataset& data, std::ostream& os) {
  data.validate();
  std::vector<std::string> header = data.feature_names;
  header.push_back("__y");
  header.push_back("__ym");
  for (std::size_t k = 0; k < data.sensitive_count(); ++k) header.push_back("__a" + std::to_string(k));
  csv::write_row(os, header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    row.clear();
    for (std::size_t j = 0; j < data.cols(); ++j)
      row.push_back(csv::format_double(data.features(static_cast<Index>(i), static_cast<Index>(j))));
    row.push_back(std::to_string(data.observed_labels[i]));
    row.push_back(data.ideal_labels ? std::to_string((*data.ideal_labels)[i]) : std::string());
    for (std::size_t k = 0; k < data.sensitive_count(); ++k)
      row.push_back(std::to_string(data.sensitive(static_cast<Index>(i), static_cast<Index>(k))));
    csv::write_row(os, row);
  }
}

inline void write_dataset_csv(const TabularDataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_dataset_csv(data, os);
}

inline TabularDataset read_dataset_csv(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  if (!csv::read_record(is, line)) throw Error(source + ": empty dataset dump");
  const auto header = csv::split(line);
  std::optional<std::size_t> y_col, ym_col;
  std::vector<std::size_t> a_cols, f_cols;
  TabularDataset data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "__y") {
      y_col = c;
    } else if (h == "__ym") {
      ym_col = c;
    } else if (h.rfind("__a", 0) == 0) {
      a_cols.push_back(c);
      data.sensitive_names.push_back(h);
    } else {
      f_cols.push_back(c);
      data.feature_names.push_back(h);
      data.column_kinds.push_back(h.find('=') != std::string::npos ? ColumnKind::onehot : ColumnKind::continuous);
    }
  }
  if (!y_col) throw Error(source + ": dump lacks the __y column");
  std::vector<std::vector<double>> feats;
  std::vector<std::vector<std::uint8_t>> sens;
  bool any_ym = false, all_ym = true;
  Bits ym;
  std::size_t row = 0;
  while (csv::read_record(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = csv::split(line);
    if (cells.size() != header.size())
      throw Error(source + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(header.size()));
    std::vector<double> f;
    for (auto c : f_cols) f.push_back(csv::parse_double(cells[c], row));
    feats.push_back(std::move(f));
    data.observed_labels.push_back(static_cast<std::uint8_t>(csv::parse_double(cells[*y_col], row)));
    if (ym_col && !cells[*ym_col].empty()) {
      any_ym = true;
      ym.push_back(static_cast<std::uint8_t>(csv::parse_double(cells[*ym_col], row)));
    } else {
      all_ym = false;
      ym.push_back(0);
    }
    std::vector<std::uint8_t> s;
    for (auto c : a_cols) s.push_back(static_cast<std::uint8_t>(csv::parse_double(cells[c], row)));
    sens.push_back(std::move(s));
  }
  if (feats.empty()) throw Error(source + ": dataset dump has no rows");
  if (any_ym && !all_ym) throw Error(source + ": __ym is present on some rows only");
  data.features.resize(static_cast<Index>(feats.size()), static_cast<Index>(f_cols.size()));
  data.sensitive.resize(static_cast<Index>(feats.size()), static_cast<Index>(a_cols.size()));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    for (std::size_t j = 0; j < f_cols.size(); ++j) data.features(static_cast<Index>(i), static_cast<Index>(j)) = feats[i][j];
    for (std::size_t k = 0; k < a_cols.size(); ++k) data.sensitive(static_cast<Index>(i), static_cast<Index>(k)) = sens[i][k];
  }
  if (any_ym) data.ideal_labels = std::move(ym);
  data.validate();
  return data;
}

inline TabularDataset read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open dataset dump '" + path + "'");
  return read_dataset_csv(is, path);
}

}  // namespace dbrf
