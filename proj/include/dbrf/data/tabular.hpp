#pragma once

#include "dbrf/data/dataset.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <unordered_map>

namespace dbrf {

/// Declarative preprocessing recipe for a raw CSV table.
///
/// Categorical columns are aggregated into named levels and one-hot encoded
/// as "column=level"; continuous columns pass through unchanged. Rows holding
/// a missing token in any column the recipe reads are dropped, unless the
/// token is explicitly listed inside a level.
struct TabularSchema {
  struct Filter {
    std::string column;
    std::vector<std::string> in;
    std::vector<std::string> not_in;
    std::optional<double> min;
    std::optional<double> max;
  };
  struct Sensitive {
    std::string name;
    std::string column;
    std::vector<std::string> protected_values;  // bit = 1 when value is listed ...
    bool invert = false;                        // ... or when it is NOT listed
  };
  struct Feature {
    std::string column;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<std::pair<std::string, std::vector<std::string>>> levels;
    std::optional<std::string> other_level;  // may name an existing level

    std::optional<std::size_t> other_index() const {
      if (!other_level) return std::nullopt;
      for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i].first == *other_level) return i;
      return std::nullopt;
    }
    bool other_has_own_column() const { return other_level && !other_index(); }
  };

  std::string name;
  int version = 1;
  bool header = true;
  std::vector<std::string> columns;
  char delimiter = ',';
  bool trim = true;
  std::vector<std::string> missing_tokens;
  std::vector<Filter> filters;
  std::string label_column;
  std::vector<std::string> label_positive;
  std::vector<std::string> label_negative;
  std::vector<Sensitive> sensitive;
  std::map<std::string, std::vector<std::string>> groupings;
  std::vector<Feature> features;

  static TabularSchema from_json(const nlohmann::json& j) {
    TabularSchema s;
    try {
      s.name = j.value("name", std::string("dataset"));
      s.version = j.value("version", 1);
      s.header = j.value("header", true);
      if (j.contains("columns")) s.columns = j.at("columns").get<std::vector<std::string>>();
      const auto delim = j.value("delimiter", std::string(","));
      require(delim.size() == 1, "schema: delimiter must be one character");
      s.delimiter = delim[0];
      s.trim = j.value("trim", true);
      if (j.contains("missing")) s.missing_tokens = j.at("missing").get<std::vector<std::string>>();
      for (const auto& f : j.value("filters", nlohmann::json::array())) {
        Filter flt;
        flt.column = f.at("column").get<std::string>();
        if (f.contains("in")) flt.in = f.at("in").get<std::vector<std::string>>();
        if (f.contains("not_in")) flt.not_in = f.at("not_in").get<std::vector<std::string>>();
        if (f.contains("min")) flt.min = f.at("min").get<double>();
        if (f.contains("max")) flt.max = f.at("max").get<double>();
        s.filters.push_back(std::move(flt));
      }
      const auto& lab = j.at("label");
      s.label_column = lab.at("column").get<std::string>();
      s.label_positive = lab.at("positive").get<std::vector<std::string>>();
      if (lab.contains("negative")) s.label_negative = lab.at("negative").get<std::vector<std::string>>();
      for (const auto& a : j.at("sensitive")) {
        Sensitive sen;
        sen.name = a.at("name").get<std::string>();
        sen.column = a.at("column").get<std::string>();
        if (a.contains("protected")) {
          sen.protected_values = a.at("protected").get<std::vector<std::string>>();
        } else {
          sen.protected_values = a.at("unprotected").get<std::vector<std::string>>();
          sen.invert = true;
        }
        s.sensitive.push_back(std::move(sen));
      }
      if (j.contains("groupings")) {
        s.groupings = j.at("groupings").get<std::map<std::string, std::vector<std::string>>>();
      } else {
        std::vector<std::string> all;
        for (const auto& a : s.sensitive) all.push_back(a.name);
        s.groupings["default"] = all;
      }
      for (const auto& f : j.at("features")) {
        Feature feat;
        feat.column = f.at("column").get<std::string>();
        const auto kind = f.value("kind", std::string("continuous"));
        if (kind == "continuous") {
          feat.kind = ColumnKind::continuous;
        } else if (kind == "categorical") {
          feat.kind = ColumnKind::onehot;
          // "levels": [[name, [raw values...]], ...] keeps column order explicit.
          for (const auto& lv : f.at("levels")) {
            feat.levels.emplace_back(lv.at(0).get<std::string>(), lv.at(1).get<std::vector<std::string>>());
          }
          if (f.contains("other")) feat.other_level = f.at("other").get<std::string>();
        } else {
          throw ConfigError("schema: unknown feature kind '" + kind + "'");
        }
        s.features.push_back(std::move(feat));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("schema: ") + e.what());
    }
    require(!s.header ? !s.columns.empty() : true, "schema: headerless files need an explicit column list");
    require(!s.features.empty(), "schema: no features declared");
    return s;
  }

  static TabularSchema load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open schema '" + path + "'");
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("schema '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  std::size_t encoded_width() const {
    std::size_t d = 0;
    for (const auto& f : features) d += f.kind == ColumnKind::continuous ? 1 : f.levels.size() + (f.other_has_own_column() ? 1 : 0);
    return d;
  }
};

/// Reads a raw table according to `schema`; `grouping` names the set of
/// sensitive attributes to encode as bits (their conjunction is the protected group).
inline TabularDataset load_tabular(std::istream& is, const TabularSchema& schema, const std::string& grouping) {
  const auto g = schema.groupings.find(grouping);
  if (g == schema.groupings.end()) throw ConfigError("schema has no grouping '" + grouping + "'");
  std::vector<const TabularSchema::Sensitive*> sens;
  for (const auto& name : g->second) {
    auto it = std::find_if(schema.sensitive.begin(), schema.sensitive.end(),
                           [&](const auto& s) { return s.name == name; });
    if (it == schema.sensitive.end()) throw ConfigError("grouping references unknown sensitive attribute '" + name + "'");
    sens.push_back(&*it);
  }

  std::string line;
  std::vector<std::string> names = schema.columns;
  if (schema.header) {
    if (!csv::read_record(is, line)) throw IngestionError(0, "empty file");
    names = csv::split(line, schema.delimiter, schema.trim);
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);  // first occurrence wins
  auto col = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw IngestionError(0, "column '" + name + "' not found");
    return it->second;
  };

  const std::set<std::string> missing(schema.missing_tokens.begin(), schema.missing_tokens.end());
  auto listed = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };

  std::vector<std::size_t> read_cols;
  const auto label_idx = col(schema.label_column);
  read_cols.push_back(label_idx);
  for (auto* s : sens) read_cols.push_back(col(s->column));
  for (const auto& f : schema.filters) read_cols.push_back(col(f.column));
  std::vector<std::size_t> feat_idx;
  for (const auto& f : schema.features) {
    feat_idx.push_back(col(f.column));
  }

  TabularDataset data;
  for (const auto& f : schema.features) {
    if (f.kind == ColumnKind::continuous) {
      data.feature_names.push_back(f.column);
      data.column_kinds.push_back(ColumnKind::continuous);
    } else {
      for (const auto& [lv, _] : f.levels) {
        data.feature_names.push_back(f.column + "=" + lv);
        data.column_kinds.push_back(ColumnKind::onehot);
      }
      if (f.other_has_own_column()) {
        data.feature_names.push_back(f.column + "=" + *f.other_level);
        data.column_kinds.push_back(ColumnKind::onehot);
      }
    }
  }
  for (auto* s : sens) data.sensitive_names.push_back(s->name);

  const std::size_t d = data.feature_names.size();
  std::vector<double> values;
  std::vector<std::uint8_t> sens_bits;
  std::size_t row = 0, kept = 0;
  bool any_line = schema.header;
  std::vector<double> rec(d);
  while (csv::read_record(is, line)) {
    any_line = true;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++row;
    const auto cells = csv::split(line, schema.delimiter, schema.trim);
    if (cells.size() != names.size())
      throw IngestionError(row, "expected " + std::to_string(names.size()) + " fields, found " +
                                    std::to_string(cells.size()));
    bool drop = false;
    for (auto c : read_cols)
      if (missing.count(cells[c])) drop = true;
    for (std::size_t k = 0; k < schema.features.size() && !drop; ++k) {
      const auto& v = cells[feat_idx[k]];
      if (!missing.count(v)) continue;
      bool mapped = false;
      for (const auto& [_, raw] : schema.features[k].levels) mapped = mapped || listed(raw, v);
      if (!mapped) drop = true;
    }
    if (drop) continue;

    bool keep = true;
    for (const auto& f : schema.filters) {
      const auto& v = cells[col(f.column)];
      if (!f.in.empty() && !listed(f.in, v)) keep = false;
      if (!f.not_in.empty() && listed(f.not_in, v)) keep = false;
      if (f.min || f.max) {
        double x = 0.0;
        if (!csv::try_parse_double(v, x)) {
          if (v.empty()) {
            keep = false;  // empty numeric cell counts as missing
            continue;
          }
          throw IngestionError(row, "filter column '" + f.column + "' value '" + v + "' is not numeric");
        }
        if ((f.min && x < *f.min) || (f.max && x > *f.max)) keep = false;
      }
    }
    if (!keep) continue;

    const auto& yv = cells[label_idx];
    std::uint8_t y = 0;
    if (listed(schema.label_positive, yv)) {
      y = 1;
    } else if (!schema.label_negative.empty() && !listed(schema.label_negative, yv)) {
      throw IngestionError(row, "unknown label value '" + yv + "'");
    }

    std::size_t out = 0;
    for (std::size_t k = 0; k < schema.features.size(); ++k) {
      const auto& f = schema.features[k];
      const auto& v = cells[feat_idx[k]];
      if (f.kind == ColumnKind::continuous) {
        if (v.empty()) throw IngestionError(row, "empty value in continuous column '" + f.column + "'");
        rec[out++] = csv::parse_double(v, row);
        continue;
      }
      bool hit = false;
      const std::size_t first = out;
      for (const auto& [_, raw] : f.levels) {
        const bool m = listed(raw, v);
        hit = hit || m;
        rec[out++] = m ? 1.0 : 0.0;
      }
      if (f.other_has_own_column()) {
        rec[out++] = hit ? 0.0 : 1.0;
      } else if (f.other_level) {
        if (!hit) rec[first + *f.other_index()] = 1.0;
      } else if (!hit) {
        throw IngestionError(row, "unknown category '" + v + "' in column '" + f.column + "'");
      }
    }
    values.insert(values.end(), rec.begin(), rec.end());
    for (auto* s : sens) {
      const bool in = listed(s->protected_values, cells[col(s->column)]);
      sens_bits.push_back((in != s->invert) ? 1 : 0);
    }
    data.observed_labels.push_back(y);
    ++kept;
  }
  if (!any_line) throw IngestionError(0, "empty file");
  if (kept == 0) throw IngestionError(0, "no rows survived filtering");

  data.features.resize(static_cast<Index>(kept), static_cast<Index>(d));
  data.sensitive.resize(static_cast<Index>(kept), static_cast<Index>(sens.size()));
  for (std::size_t i = 0; i < kept; ++i) {
    for (std::size_t j = 0; j < d; ++j) data.features(static_cast<Index>(i), static_cast<Index>(j)) = values[i * d + j];
    for (std::size_t k = 0; k < sens.size(); ++k)
      data.sensitive(static_cast<Index>(i), static_cast<Index>(k)) = sens_bits[i * sens.size() + k];
  }
  data.validate();
  return data;
}

inline TabularDataset load_tabular(const std::string& path, const TabularSchema& schema, const std::string& grouping) {
  std::ifstream is(path);
  if (!is) throw IngestionError(0, "cannot open '" + path + "'");
  return load_tabular(is, schema, grouping);
}

}  // namespace dbrf
