#pragma once

#include "dbrf/data/dataset.hpp"

#include <numbers>

namespace dbrf {

/// Two-Gaussian generator with a density-ratio sensitive attribute.
///
/// Class labels are drawn first, features come from the class Gaussian, and
/// the sensitive bit is Bernoulli with
///   p(a=1) = N(x'; pos) / (N(x'; pos) + N(x'; neg)),
/// where x' is x rotated by `rotation_phi`. The default angle puts the
/// generated labels' demographic-parity gap near 0.02 with ~5150 rows in a=1.
struct SyntheticSpec {
  std::size_t n = 10800;
  Eigen::Vector2d mean_pos{2.0, 2.0};
  Eigen::Matrix2d cov_pos{{5.0, 1.0}, {1.0, 5.0}};
  Eigen::Vector2d mean_neg{-2.0, -2.0};
  Eigen::Matrix2d cov_neg{{10.0, 1.0}, {1.0, 3.0}};
  double rotation_phi = 5.1;
  double positive_fraction = 0.5;
  std::uint64_t seed = 0;
};

namespace detail {

struct Gaussian2 {
  Eigen::Vector2d mean;
  Eigen::Matrix2d chol;  // lower factor
  Eigen::Matrix2d inv;
  double log_norm;

  Gaussian2(const Eigen::Vector2d& m, const Eigen::Matrix2d& cov, const char* what) : mean(m) {
    require(cov.allFinite() && std::abs(cov(0, 1) - cov(1, 0)) <= 1e-12 * (1.0 + std::abs(cov(0, 1))),
            std::string(what) + " covariance must be symmetric");
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    require(llt.info() == Eigen::Success && cov.determinant() > 0.0,
            std::string(what) + " covariance is not positive-definite");
    chol = llt.matrixL();
    inv = cov.inverse();
    log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant());
  }

  double log_pdf(const Eigen::Vector2d& x) const {
    const Eigen::Vector2d d = x - mean;
    return log_norm - 0.5 * d.dot(inv * d);
  }
};

}  // namespace detail

inline double synthetic_sensitive_probability(const SyntheticSpec& spec, const Eigen::Vector2d& x) {
  detail::Gaussian2 pos(spec.mean_pos, spec.cov_pos, "positive-class");
  detail::Gaussian2 neg(spec.mean_neg, spec.cov_neg, "negative-class");
  const double c = std::cos(spec.rotation_phi), s = std::sin(spec.rotation_phi);
  const Eigen::Vector2d xr{c * x[0] - s * x[1], s * x[0] + c * x[1]};
  return sigmoid(pos.log_pdf(xr) - neg.log_pdf(xr));
}

inline TabularDataset generate_synthetic(const SyntheticSpec& spec) {
  require(spec.n > 0, "synthetic: n must be positive");
  require(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0, "synthetic: positive_fraction must lie in (0,1)");
  const detail::Gaussian2 pos(spec.mean_pos, spec.cov_pos, "positive-class");
  const detail::Gaussian2 neg(spec.mean_neg, spec.cov_neg, "negative-class");

  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const auto n_pos = static_cast<std::size_t>(std::llround(spec.positive_fraction * static_cast<double>(spec.n)));
  Bits labels(spec.n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  TabularDataset data;
  data.features.resize(static_cast<Index>(spec.n), 2);
  data.sensitive.resize(static_cast<Index>(spec.n), 1);
  data.feature_names = {"x0", "x1"};
  data.column_kinds = {ColumnKind::continuous, ColumnKind::continuous};
  data.sensitive_names = {"a"};

  const double c = std::cos(spec.rotation_phi), s = std::sin(spec.rotation_phi);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto& g = labels[i] ? pos : neg;
    const Eigen::Vector2d e{normal(rng), normal(rng)};
    const Eigen::Vector2d x = g.mean + g.chol * e;
    const Eigen::Vector2d xr{c * x[0] - s * x[1], s * x[0] + c * x[1]};
    const double p = sigmoid(pos.log_pdf(xr) - neg.log_pdf(xr));
    data.features.row(static_cast<Index>(i)) = x.transpose();
    data.sensitive(static_cast<Index>(i), 0) = uniform(rng) < p ? 1 : 0;
  }
  data.observed_labels = labels;
  data.ideal_labels = labels;
  data.validate();
  return data;
}

}  // namespace dbrf
