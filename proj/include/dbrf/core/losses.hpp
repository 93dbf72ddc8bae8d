#pragma once

#include "dbrf/core/common.hpp"

namespace dbrf {

// -t*log(sigmoid(l)) - (1-t)*log(1-sigmoid(l)), stable for any l.
inline double bce_with_logit(double logit, double target) { return softplus(logit) - target * logit; }

/// Mean over examples of weight * BCE(logit, target).
inline double binary_cross_entropy(const Vector& logits, const Vector& targets, const Vector& weights) {
  require(logits.size() == targets.size() && logits.size() == weights.size(),
          "binary_cross_entropy: length mismatch");
  if (logits.size() == 0) return 0.0;
  double sum = 0.0;
  for (Index i = 0; i < logits.size(); ++i) sum += weights[i] * bce_with_logit(logits[i], targets[i]);
  return sum / static_cast<double>(logits.size());
}

inline double binary_cross_entropy(const Vector& logits, const Vector& targets) {
  return binary_cross_entropy(logits, targets, Vector::Ones(logits.size()));
}

inline Vector binary_cross_entropy_grad(const Vector& logits, const Vector& targets, const Vector& weights) {
  const double n = static_cast<double>(logits.size());
  Vector g(logits.size());
  for (Index i = 0; i < logits.size(); ++i) g[i] = weights[i] * (sigmoid(logits[i]) - targets[i]) / n;
  return g;
}

/// Multi-output form: rows are outputs, columns examples. Per-example losses
/// are summed over rows, then averaged over columns.
inline Vector bce_per_example(const Matrix& logits, const Matrix& targets) {
  require(logits.rows() == targets.rows() && logits.cols() == targets.cols(), "bce: shape mismatch");
  Vector out = Vector::Zero(logits.cols());
  for (Index j = 0; j < logits.cols(); ++j)
    for (Index i = 0; i < logits.rows(); ++i) out[j] += bce_with_logit(logits(i, j), targets(i, j));
  return out;
}

// Gradient of sum_j scale[j] * bce_per_example(logits, targets)[j].
inline Matrix bce_per_example_grad(const Matrix& logits, const Matrix& targets, const Vector& scale) {
  Matrix g(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j)
    for (Index i = 0; i < logits.rows(); ++i) g(i, j) = scale[j] * (sigmoid(logits(i, j)) - targets(i, j));
  return g;
}

/// 0.5 * ||predicted - target||^2 (unit-variance Gaussian NLL up to a constant).
inline double gaussian_recon_loss(const Vector& predicted, const Vector& target) {
  require(predicted.size() == target.size(), "gaussian_recon_loss: length mismatch");
  return 0.5 * (predicted - target).squaredNorm();
}

inline Vector gaussian_recon_loss_grad(const Vector& predicted, const Vector& target) { return predicted - target; }

/// Column-typed reconstruction NLL. `onehot` marks rows (features) scored with
/// BCE on logits; every other row uses the squared-error form. Returns the
/// per-example loss summed over features.
inline Vector mixed_recon_per_example(const Matrix& predicted, const Matrix& target, const std::vector<bool>& onehot) {
  require(predicted.rows() == target.rows() && predicted.cols() == target.cols(), "recon: shape mismatch");
  require(static_cast<Index>(onehot.size()) == predicted.rows(), "recon: column kind count mismatch");
  Vector out = Vector::Zero(predicted.cols());
  for (Index j = 0; j < predicted.cols(); ++j) {
    double s = 0.0;
    for (Index i = 0; i < predicted.rows(); ++i) {
      if (onehot[static_cast<std::size_t>(i)]) {
        s += bce_with_logit(predicted(i, j), target(i, j));
      } else {
        const double d = predicted(i, j) - target(i, j);
        s += 0.5 * d * d;
      }
    }
    out[j] = s;
  }
  return out;
}

inline Matrix mixed_recon_grad(const Matrix& predicted, const Matrix& target, const std::vector<bool>& onehot,
                               double scale) {
  Matrix g(predicted.rows(), predicted.cols());
  for (Index j = 0; j < predicted.cols(); ++j)
    for (Index i = 0; i < predicted.rows(); ++i)
      g(i, j) = scale * (onehot[static_cast<std::size_t>(i)] ? sigmoid(predicted(i, j)) - target(i, j)
                                                             : predicted(i, j) - target(i, j));
  return g;
}

}  // namespace dbrf
