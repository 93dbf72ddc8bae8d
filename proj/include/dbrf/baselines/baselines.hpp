#pragma once

#include "dbrf/train/trainer.hpp"

namespace dbrf {

// ---- vanilla VAE ------------------------------------------------------------

/// Single latent block of width z_dim + b_dim, ELBO loss only.
struct VaeParams {
  DenseLayer hidden;
  DenseLayer mu;
  DenseLayer log_var;
  Mlp decoder;
  std::vector<bool> onehot;
};

inline void visit_tensors(VaeParams& p, const std::string& prefix, const TensorVisitor& f) {
  visit_tensors(p.hidden, prefix + "hidden", f);
  visit_tensors(p.mu, prefix + "mu", f);
  visit_tensors(p.log_var, prefix + "log_var", f);
  visit_tensors(p.decoder, prefix + "decoder", f);
}

inline void collect_tensors(VaeParams& p, std::vector<std::span<double>>& out) {
  visit_tensors(p, "", [&](const std::string&, Index, Index, std::span<double> s) { out.push_back(s); });
}

inline VaeParams make_vae(Index input_dim, std::vector<bool> onehot, Index latent, Index hidden, std::uint64_t seed) {
  require(input_dim > 0 && latent > 0 && hidden > 0, "vae: sizes must be positive");
  if (onehot.empty()) onehot.assign(static_cast<std::size_t>(input_dim), false);
  require(static_cast<Index>(onehot.size()) == input_dim, "vae: onehot mask length must equal input_dim");
  Rng rng(seed);
  VaeParams p;
  p.hidden = make_dense(input_dim, hidden, Activation::relu, rng);
  p.mu = make_dense(hidden, latent, Activation::identity, rng);
  p.log_var = make_dense(hidden, latent, Activation::identity, rng);
  p.decoder = make_mlp({latent, hidden, input_dim}, rng);
  p.onehot = std::move(onehot);
  return p;
}

struct VaeLoss {
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Negative ELBO per example, batch-averaged: recon + KL (weight exactly 1).
inline VaeLoss vae_loss(const VaeParams& p, const Matrix& x, const Matrix& eps, VaeParams* grads = nullptr) {
  const Index B = x.cols();
  require(B > 0, "vae_loss: empty batch");
  DenseCache ch, cm, cv;
  const bool g = grads != nullptr;
  const Matrix h = dense_forward(p.hidden, x, g ? &ch : nullptr);
  GaussianBatch head{dense_forward(p.mu, h, g ? &cm : nullptr), dense_forward(p.log_var, h, g ? &cv : nullptr)};
  const Matrix z = reparameterize(head, eps);
  MlpCache dc;
  const Matrix x_hat = mlp_forward(p.decoder, z, g ? &dc : nullptr);
  VaeLoss out;
  out.recon = mixed_recon_per_example(x_hat, x, p.onehot).mean();
  out.kl = gaussian_kl(head).mean();
  out.total = out.recon + out.kl;
  if (!std::isfinite(out.total)) throw NumericError("elbo", "vae loss is not finite");
  if (!g) return out;
  const double inv_b = 1.0 / static_cast<double>(B);
  const Matrix d_z = mlp_backward(p.decoder, dc, mixed_recon_grad(x_hat, x, p.onehot, inv_b), &grads->decoder);
  const auto r = reparameterize_backward(head, eps, d_z);
  const auto k = gaussian_kl_backward(head, Vector::Constant(B, inv_b));
  Matrix d_h = dense_backward(p.mu, cm, r.mu + k.mu, &grads->mu);
  d_h += dense_backward(p.log_var, cv, r.log_var + k.log_var, &grads->log_var);
  dense_backward(p.hidden, ch, d_h, &grads->hidden);
  return out;
}

/// Posterior means, latent x n.
inline Matrix vae_encode_means(const VaeParams& p, const Matrix& x) {
  return dense_forward(p.mu, dense_forward(p.hidden, x));
}

struct VaeFit {
  VaeParams params;
  std::vector<double> recon_per_epoch;  // epoch-averaged
  std::vector<double> kl_per_epoch;
};

/// Unsupervised: reads only the features of `train`.
inline VaeFit train_vanilla_vae(const TrainConfig& cfg, const TabularDataset& train) {
  cfg.validate();
  require(train.rows() > 0 && cfg.batch_size <= train.rows(), "vae: batch_size exceeds training set size");
  const Index latent = cfg.z_dim + cfg.b_dim;
  VaeFit fit{make_vae(static_cast<Index>(train.cols()), train.onehot_mask(), latent, cfg.hidden, mix_seed(cfg.seed, 0)),
             {},
             {}};
  OptimizerState opt(AdamSettings{cfg.lr_model});
  Rng rng(mix_seed(cfg.seed, 1));
  const Matrix X = features_by_column(train);
  std::vector<Index> order(train.rows());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    double recon = 0.0, kl = 0.0;
    std::size_t nb = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Matrix xb(X.rows(), static_cast<Index>(end - start));
      for (std::size_t j = start; j < end; ++j) xb.col(static_cast<Index>(j - start)) = X.col(order[j]);
      const Matrix eps = standard_normal(latent, xb.cols(), rng);
      VaeParams g = zeroed_copy(fit.params);
      const VaeLoss l = vae_loss(fit.params, xb, eps, &g);
      if (!all_parameters_finite(g)) throw NumericError("elbo", "vae gradient is not finite");
      adam_step(fit.params, g, opt);
      recon += l.recon;
      kl += l.kl;
      ++nb;
    }
    fit.recon_per_epoch.push_back(recon / static_cast<double>(nb));
    fit.kl_per_epoch.push_back(kl / static_cast<double>(nb));
  }
  return fit;
}

// ---- logistic classifier ----------------------------------------------------

struct LogisticClassifier {
  Vector weights;
  double bias = 0.0;
};

struct LogisticConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 128;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

inline Vector logistic_logits(const LogisticClassifier& c, const Matrix& reps) {
  require(reps.rows() == c.weights.size(), "logistic: representation width mismatch");
  return (c.weights.transpose() * reps).transpose().array() + c.bias;
}

/// 1 iff the logit is strictly positive.
inline Bits logistic_predict(const LogisticClassifier& c, const Matrix& reps) {
  return threshold_logits(logistic_logits(c, reps));
}

/// Mini-batch BCE minimized with the shared Adam optimizer. `reps` is
/// width x n (columns are examples).
inline LogisticClassifier train_logistic(const Matrix& reps, const Bits& labels, const LogisticConfig& cfg = {}) {
  const auto n = static_cast<std::size_t>(reps.cols());
  require(n > 0 && labels.size() == n, "logistic: representation and label counts differ");
  require(cfg.batch_size > 0, "logistic: batch_size must be positive");
  LogisticClassifier c{Vector::Zero(reps.rows()), 0.0};
  Vector bias(1);
  bias[0] = 0.0;
  OptimizerState opt(AdamSettings{cfg.learning_rate});
  Rng rng(cfg.seed);
  std::vector<Index> order(n);
  const std::size_t bs = std::min(cfg.batch_size, n);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      const auto B = static_cast<Index>(end - start);
      Matrix xb(reps.rows(), B);
      Vector yb(B);
      for (std::size_t j = start; j < end; ++j) {
        xb.col(static_cast<Index>(j - start)) = reps.col(order[j]);
        yb[static_cast<Index>(j - start)] = labels[static_cast<std::size_t>(order[j])];
      }
      c.bias = bias[0];
      const Vector g = binary_cross_entropy_grad(logistic_logits(c, xb), yb, Vector::Ones(B));
      Vector gw = xb * g;
      Vector gb(1);
      gb[0] = g.sum();
      adam_step({as_span(c.weights), as_span(bias)}, {as_span(gw), as_span(gb)}, opt);
    }
  }
  c.bias = bias[0];
  return c;
}

/// Logistic classifier on frozen representations (VAE latents, or DBRF's z).
inline LogisticClassifier train_downstream(const Matrix& reps, const Bits& observed_labels,
                                           const LogisticConfig& cfg = {}) {
  return train_logistic(reps, observed_labels, cfg);
}

/// Logistic model on the features against observed labels. Ideal labels are
/// stripped before training so they can never leak in.
inline LogisticClassifier train_raw_lr(const TabularDataset& train, const LogisticConfig& cfg = {}) {
  const TabularDataset visible = without_ideal_labels(train);
  return train_logistic(features_by_column(visible), visible.observed_labels, cfg);
}

/// VAE, then a downstream logistic classifier on its posterior means.
struct VaeClassifier {
  VaeParams vae;
  LogisticClassifier head;
};

inline VaeClassifier train_vae_lr(const TrainConfig& vae_cfg, const LogisticConfig& lr_cfg, const TabularDataset& train) {
  const TabularDataset visible = without_ideal_labels(train);
  VaeFit f = train_vanilla_vae(vae_cfg, visible);
  const Matrix reps = vae_encode_means(f.params, features_by_column(visible));
  return {std::move(f.params), train_downstream(reps, visible.observed_labels, lr_cfg)};
}

inline Bits predict(const VaeClassifier& m, const Matrix& x) {
  return logistic_predict(m.head, vae_encode_means(m.vae, x));
}

}  // namespace dbrf
