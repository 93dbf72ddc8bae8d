#pragma once

#include "dbrf/data/dataset.hpp"

namespace dbrf {

/// Group-conditional label noise.
/// rho0 = p(y=0 | y_m=1, a=1), rho1 = p(y=1 | y_m=0, a=0).
struct CorruptionSpec {
  double rho0 = 0.0;
  double rho1 = 0.0;
  std::uint64_t seed = 0;

  static CorruptionSpec symmetric(double rho, std::uint64_t seed) { return {rho, rho, seed}; }

  void validate() const {
    require(rho0 >= 0.0 && rho0 < 0.5 && rho1 >= 0.0 && rho1 < 0.5, "corruption rates must lie in [0, 0.5)");
  }
};

/// Returns a copy whose observed labels are the ideal labels flipped
/// 1 -> 0 in the protected group and 0 -> 1 in the privileged group. Only
/// observed_labels changes. `group_column` picks one sensitive bit, nullopt
/// uses the conjunction of all bits.
inline TabularDataset inject_label_bias(const TabularDataset& data, const CorruptionSpec& spec,
                                        std::optional<std::size_t> group_column = std::nullopt) {
  spec.validate();
  require(data.ideal_labels.has_value(), "inject_label_bias: ideal labels are required");
  const Bits group = group_bits(data, group_column);
  TabularDataset out = data;
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Bits& ideal = *data.ideal_labels;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    // One draw per row regardless of eligibility keeps flips for row i
    // independent of the labels of other rows.
    const double u = uniform(rng);
    std::uint8_t y = ideal[i];
    if (group[i] == 1 && ideal[i] == 1 && u < spec.rho0) y = 0;
    if (group[i] == 0 && ideal[i] == 0 && u < spec.rho1) y = 1;
    out.observed_labels[i] = y;
  }
  return out;
}

/// Marks the current observed labels as ideal (real data is taken as clean).
inline TabularDataset with_labels_as_ideal(TabularDataset data) {
  if (!data.ideal_labels) data.ideal_labels = data.observed_labels;
  return data;
}

}  // namespace dbrf
