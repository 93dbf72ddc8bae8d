#pragma once

#include "dbrf/core/common.hpp"

namespace dbrf {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

/// Diagonal Gaussian posterior parameters. Vectors for a single example,
/// or matrices (dim x batch) when used batched.
template <class T>
struct BasicGaussianHead {
  T mu;
  T log_var;
};

using GaussianHead = BasicGaussianHead<Vector>;
using GaussianBatch = BasicGaussianHead<Matrix>;

template <class T>
T clamp_log_var(const T& raw) {
  // NaN-safe: a NaN stays NaN and is caught by the finite checks downstream.
  return raw.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
}

// Zero where the clamp was active.
template <class T>
T clamp_log_var_backward(const T& raw, const T& upstream) {
  return upstream.cwiseProduct(
      ((raw.array() >= kLogVarMin) && (raw.array() <= kLogVarMax)).template cast<double>().matrix());
}

template <class T>
void check_head(const BasicGaussianHead<T>& head) {
  require(head.mu.rows() == head.log_var.rows() && head.mu.cols() == head.log_var.cols(),
          "gaussian head: mu and log_var shapes differ");
}

/// sample = mu + exp(0.5 * log_var) * noise, log_var clamped to [-10, 10].
template <class T>
T reparameterize(const BasicGaussianHead<T>& head, const T& noise) {
  check_head(head);
  require(noise.rows() == head.mu.rows() && noise.cols() == head.mu.cols(),
          "reparameterize: noise shape does not match mu");
  const T lv = clamp_log_var(head.log_var);
  return head.mu + (0.5 * lv.array()).exp().matrix().cwiseProduct(noise);
}

/// Gradients of a sample w.r.t. mu and (clamped) log_var given d(loss)/d(sample).
template <class T>
BasicGaussianHead<T> reparameterize_backward(const BasicGaussianHead<T>& head, const T& noise, const T& d_sample) {
  const T lv = clamp_log_var(head.log_var);
  T d_lv = d_sample.cwiseProduct(noise).cwiseProduct((0.5 * (0.5 * lv.array()).exp()).matrix());
  return {d_sample, clamp_log_var_backward(head.log_var, d_lv)};
}

/// KL(N(mu, exp(log_var)) || N(0, I)), summed over dimensions.
inline double gaussian_kl(const GaussianHead& head) {
  check_head(head);
  const Vector lv = clamp_log_var(head.log_var);
  return 0.5 * (lv.array().exp() + head.mu.array().square() - 1.0 - lv.array()).sum();
}

/// Per-example KL for a batch; returns a vector of length batch.
inline Vector gaussian_kl(const GaussianBatch& head) {
  check_head(head);
  const Matrix lv = clamp_log_var(head.log_var);
  return (0.5 * (lv.array().exp() + head.mu.array().square() - 1.0 - lv.array())).colwise().sum().transpose();
}

/// Gradient of `scale[j] * KL_j` for each column j.
inline GaussianBatch gaussian_kl_backward(const GaussianBatch& head, const Vector& scale) {
  const Matrix lv = clamp_log_var(head.log_var);
  Matrix d_mu = head.mu * scale.asDiagonal();
  Matrix d_lv = (0.5 * (lv.array().exp() - 1.0)).matrix() * scale.asDiagonal();
  return {std::move(d_mu), clamp_log_var_backward(head.log_var, d_lv)};
}

}  // namespace dbrf
