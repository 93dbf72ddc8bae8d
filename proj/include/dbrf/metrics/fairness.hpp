#pragma once

#include "dbrf/data/csv.hpp"
#include "dbrf/data/dataset.hpp"

#include <array>
#include <iomanip>

namespace dbrf {

/// Undefined metric (empty group, no positives). Never reported as zero.
struct MetricError : Error {
  using Error::Error;
};

/// Predictions, reference labels and the protected-group bit (1 = protected).
struct GroupedPredictions {
  Bits predictions;
  Bits labels;
  Bits group;

  void validate() const {
    if (predictions.size() != labels.size() || predictions.size() != group.size())
      throw MetricError("grouped predictions: lengths differ");
  }
};

inline double accuracy(const Bits& predictions, const Bits& labels) {
  if (predictions.size() != labels.size()) throw MetricError("accuracy: length mismatch");
  if (predictions.empty()) throw MetricError("accuracy: no examples");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) agree += predictions[i] == labels[i];
  return static_cast<double>(agree) / static_cast<double>(predictions.size());
}

/// Contingency table over (group, label) cells.
struct GroupReport {
  // [group][label]
  std::array<std::array<std::size_t, 2>, 2> count{};
  std::array<std::array<std::size_t, 2>, 2> predicted_positive{};

  std::size_t group_size(int g) const { return count[g][0] + count[g][1]; }
  std::size_t total() const { return group_size(0) + group_size(1); }

  double base_rate(int g) const {
    if (group_size(g) == 0) throw MetricError("group " + std::to_string(g) + " is empty");
    return static_cast<double>(count[g][1]) / static_cast<double>(group_size(g));
  }
  double positive_rate(int g) const {
    if (group_size(g) == 0) throw MetricError("group " + std::to_string(g) + " is empty");
    return static_cast<double>(predicted_positive[g][0] + predicted_positive[g][1]) /
           static_cast<double>(group_size(g));
  }
  double true_positive_rate(int g) const {
    if (count[g][1] == 0) throw MetricError("group " + std::to_string(g) + " has no positive labels");
    return static_cast<double>(predicted_positive[g][1]) / static_cast<double>(count[g][1]);
  }
  double delta_dp() const { return std::abs(positive_rate(1) - positive_rate(0)); }
  double deo() const { return std::abs(true_positive_rate(1) - true_positive_rate(0)); }
};

inline GroupReport group_report(const GroupedPredictions& gp) {
  gp.validate();
  GroupReport r;
  for (std::size_t i = 0; i < gp.predictions.size(); ++i) {
    const int g = gp.group[i] ? 1 : 0;
    const int y = gp.labels[i] ? 1 : 0;
    ++r.count[g][y];
    if (gp.predictions[i]) ++r.predicted_positive[g][y];
  }
  return r;
}

/// |P(y_hat=1 | a=1) - P(y_hat=1 | a=0)|
inline double delta_dp(const GroupedPredictions& gp) {
  gp.validate();
  std::array<std::size_t, 2> n{}, pos{};
  for (std::size_t i = 0; i < gp.predictions.size(); ++i) {
    const int g = gp.group[i] ? 1 : 0;
    ++n[g];
    pos[g] += gp.predictions[i] ? 1 : 0;
  }
  if (n[0] == 0 || n[1] == 0) throw MetricError("delta_dp: a group is empty");
  return std::abs(static_cast<double>(pos[1]) / static_cast<double>(n[1]) -
                  static_cast<double>(pos[0]) / static_cast<double>(n[0]));
}

/// |P(y_hat=1 | y=1, a=1) - P(y_hat=1 | y=1, a=0)|
inline double deo(const GroupedPredictions& gp) {
  gp.validate();
  std::array<std::size_t, 2> n{}, pos{};
  for (std::size_t i = 0; i < gp.predictions.size(); ++i) {
    if (!gp.labels[i]) continue;
    const int g = gp.group[i] ? 1 : 0;
    ++n[g];
    pos[g] += gp.predictions[i] ? 1 : 0;
  }
  if (n[0] == 0 || n[1] == 0) throw MetricError("deo: a group has no positive labels");
  return std::abs(static_cast<double>(pos[1]) / static_cast<double>(n[1]) -
                  static_cast<double>(pos[0]) / static_cast<double>(n[0]));
}

inline void write_report_csv(const GroupReport& r, std::ostream& os) {
  csv::write_row(os, {"group", "label", "count", "predicted_positive"});
  for (int g = 0; g < 2; ++g)
    for (int y = 0; y < 2; ++y)
      csv::write_row(os, {std::to_string(g), std::to_string(y), std::to_string(r.count[g][y]),
                          std::to_string(r.predicted_positive[g][y])});
}

inline void write_report_text(const GroupReport& r, std::ostream& os) {
  auto rate = [](auto&& f) {
    try {
      return csv::format_fixed(f(), 4);
    } catch (const MetricError&) {
      return std::string("n/a");
    }
  };
  os << std::left << std::setw(10) << "group" << std::right << std::setw(8) << "n" << std::setw(8) << "y=1"
     << std::setw(11) << "base_rate" << std::setw(10) << "pos_rate" << std::setw(8) << "tpr" << '\n';
  for (int g = 1; g >= 0; --g) {
    os << std::left << std::setw(10) << (g ? "protected" : "other") << std::right << std::setw(8) << r.group_size(g)
       << std::setw(8) << r.count[g][1] << std::setw(11) << rate([&] { return r.base_rate(g); }) << std::setw(10)
       << rate([&] { return r.positive_rate(g); }) << std::setw(8) << rate([&] { return r.true_positive_rate(g); })
       << '\n';
  }
  os << "delta_dp " << rate([&] { return r.delta_dp(); }) << "  deo " << rate([&] { return r.deo(); }) << '\n';
}

}  // namespace dbrf
