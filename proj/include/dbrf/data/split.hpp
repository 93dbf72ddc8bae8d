#pragma once

#include "dbrf/data/dataset.hpp"

#include <numeric>

namespace dbrf {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "split: train_fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return s;
}

struct TrainTest {
  TabularDataset train;
  TabularDataset test;
};

inline TrainTest split(const TabularDataset& data, double train_fraction, std::uint64_t seed) {
  const auto s = split_indices(data.rows(), train_fraction, seed);
  return {select_rows(data, s.train), select_rows(data, s.test)};
}

struct Standardized {
  TabularDataset train;
  TabularDataset test;
  Vector mean;   // per column; 0 for one-hot columns
  Vector scale;  // per column; 1 for one-hot and constant columns
  std::vector<std::string> warnings;
};

/// Centers and scales continuous columns with train-set statistics
/// (population standard deviation). One-hot columns pass through.
inline Standardized standardize(const TabularDataset& train, const TabularDataset& test) {
  require(train.cols() == test.cols(), "standardize: train/test column counts differ");
  require(train.rows() > 0, "standardize: empty training set");
  Standardized out{train, test, Vector::Zero(static_cast<Index>(train.cols())),
                   Vector::Ones(static_cast<Index>(train.cols())), {}};
  const double n = static_cast<double>(train.rows());
  for (std::size_t j = 0; j < train.cols(); ++j) {
    if (train.column_kinds[j] != ColumnKind::continuous) continue;
    const Index c = static_cast<Index>(j);
    const double mu = train.features.col(c).sum() / n;
    const double var = (train.features.col(c).array() - mu).square().sum() / n;
    double sd = std::sqrt(var);
    if (!(sd > 1e-12)) {
      out.warnings.push_back("column '" + train.feature_names[j] + "' has zero variance; centered only");
      sd = 1.0;
    }
    out.mean[c] = mu;
    out.scale[c] = sd;
    out.train.features.col(c) = (train.features.col(c).array() - mu) / sd;
    out.test.features.col(c) = (test.features.col(c).array() - mu) / sd;
  }
  return out;
}

}  // namespace dbrf
