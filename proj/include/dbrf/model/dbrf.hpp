#pragma once

#include "dbrf/core/gaussian.hpp"
#include "dbrf/core/losses.hpp"
#include "dbrf/data/dataset.hpp"
#include "dbrf/model/params.hpp"

#include <utility>

namespace dbrf {

/// Loss weights: alpha (a-reconstruction), gamma (total correlation),
/// lambda (extra KL compression), beta (H(y|b)), xi (H(y|r_m)).
struct Hyperparams {
  double alpha = 1.0;
  double gamma = 1.0;
  double lambda = 0.1;
  double beta = 0.1;
  double xi = 0.1;

  void validate() const {
    require(alpha >= 0.0 && gamma >= 0.0, "alpha and gamma must be non-negative");
    require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
    require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
    require(xi >= 0.0 && xi <= 1.0, "xi must lie in [0, 1]");
  }
};

/// Optional objective components. The disentanglement part is always on.
struct LossTerms {
  bool umi_rm = true;      // xi * H(y | r_m)
  bool umi_b = true;       // beta * H(y | b)
  bool supervised = true;  // w_b * CE(f(z), y)
};

/// Fake samples for the total-correlation discriminator: draws from the
/// N(0,I) x Uniform(0,1) prior product, or the batch with b permuted across
/// examples (an estimate of q(z)q(b)).
enum class TcFakeMode { prior, permute };

/// Columns are examples.
struct Batch {
  Matrix x;  // d x B
  Matrix a;  // k x B
  Vector y;  // B
};

inline Batch make_batch(const TabularDataset& data, const std::vector<std::size_t>& rows) {
  Batch b;
  const auto B = static_cast<Index>(rows.size());
  b.x.resize(static_cast<Index>(data.cols()), B);
  b.a.resize(static_cast<Index>(data.sensitive_count()), B);
  b.y.resize(B);
  for (Index j = 0; j < B; ++j) {
    const auto r = static_cast<Index>(rows[static_cast<std::size_t>(j)]);
    b.x.col(j) = data.features.row(r).transpose();
    b.a.col(j) = data.sensitive.row(r).transpose().cast<double>();
    b.y[j] = data.observed_labels[static_cast<std::size_t>(r)];
  }
  return b;
}

inline Batch make_batch(const TabularDataset& data) {
  std::vector<std::size_t> all(data.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(data, all);
}

/// All randomness consumed by one forward pass. Empty dropout vectors mean
/// evaluation mode for the prediction heads.
struct NoiseDraw {
  Matrix eps_z;
  Matrix eps_b;
  std::vector<Matrix> drop_z;
  std::vector<Matrix> drop_b;
};

inline NoiseDraw draw_noise(const ArchConfig& arch, Index batch, Rng& rng, bool training = true) {
  NoiseDraw n;
  n.eps_z = standard_normal(arch.z_dim, batch, rng);
  n.eps_b = standard_normal(arch.b_dim, batch, rng);
  if (training && arch.dropout > 0.0) {
    n.drop_z.push_back(dropout_mask(arch.hidden, batch, arch.dropout, rng));
    n.drop_b.push_back(dropout_mask(arch.hidden, batch, arch.dropout, rng));
  }
  return n;
}

struct LatentBatch {
  GaussianBatch z_head;  // log_var holds the raw (unclamped) encoder output
  GaussianBatch b_head;
  Matrix z_sample;
  Matrix b_sample;
  Vector rm_logit;  // empty until decode_rm
};

struct EncoderCache {
  DenseCache hidden, mu_z, log_var_z, mu_b, log_var_b;
};

inline LatentBatch encode(const Encoder& enc, const Matrix& x, const Matrix& eps_z, const Matrix& eps_b,
                          EncoderCache* cache = nullptr) {
  const Matrix h = dense_forward(enc.hidden, x, cache ? &cache->hidden : nullptr);
  LatentBatch out;
  out.z_head.mu = dense_forward(enc.mu_z, h, cache ? &cache->mu_z : nullptr);
  out.z_head.log_var = dense_forward(enc.log_var_z, h, cache ? &cache->log_var_z : nullptr);
  out.b_head.mu = dense_forward(enc.mu_b, h, cache ? &cache->mu_b : nullptr);
  out.b_head.log_var = dense_forward(enc.log_var_b, h, cache ? &cache->log_var_b : nullptr);
  out.z_sample = reparameterize(out.z_head, eps_z);
  out.b_sample = reparameterize(out.b_head, eps_b);
  return out;
}

inline LatentBatch encode(const ModelParams& p, const Matrix& x, const NoiseDraw& noise) {
  return encode(p.nets.encoder, x, noise.eps_z, noise.eps_b);
}

/// Posterior means only (evaluation path).
inline std::pair<Matrix, Matrix> encode_means(const Encoder& enc, const Matrix& x) {
  const Matrix h = dense_forward(enc.hidden, x);
  return {dense_forward(enc.mu_z, h), dense_forward(enc.mu_b, h)};
}

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

inline Matrix decode_x(const ModelParams& p, const Matrix& z, const Matrix& b) {
  return mlp_forward(p.nets.x_decoder, stack_rows(z, b));
}

inline Matrix decode_a(const ModelParams& p, const Matrix& b) { return mlp_forward(p.nets.a_decoder, b); }

inline Vector decode_rm(const ModelParams& p, const Matrix& z) {
  return mlp_forward(p.nets.rm_decoder, z).row(0).transpose();
}

/// y_m-hat = 1 iff sigmoid(r_m) > 0.5; an exact tie goes to 0.
inline Bits threshold_logits(const Vector& logits) {
  Bits out(static_cast<std::size_t>(logits.size()));
  for (Index i = 0; i < logits.size(); ++i) out[static_cast<std::size_t>(i)] = logits[i] > 0.0 ? 1 : 0;
  return out;
}

/// Deterministic inference: r_m decoded from the posterior mean of z.
inline Bits predict_ideal(const ModelParams& p, const Matrix& x) {
  return threshold_logits(decode_rm(p, encode_means(p.nets.encoder, x).first));
}

/// Prediction from the supervised head f(z) (no dropout).
inline Bits predict_from_z_head(const ModelParams& p, const Matrix& x) {
  const Matrix mu_z = encode_means(p.nets.encoder, x).first;
  return threshold_logits(mlp_forward(p.nets.y_from_z, mu_z).row(0).transpose());
}

/// E_q[log d(u=1|z,b) - log d(u=0|z,b)] = mean discriminator logit on encoder samples.
inline double tc_estimate(const Mlp& discriminator, const LatentBatch& latent) {
  const Matrix logits = mlp_forward(discriminator, stack_rows(latent.z_sample, latent.b_sample));
  return logits.mean();
}

inline double tc_estimate(const ModelParams& p, const LatentBatch& latent) { return tc_estimate(p.discriminator, latent); }

/// BCE with real (encoder) samples labelled 1 and fake samples labelled 0,
/// averaged over all 2B examples. Gradients reach only the discriminator.
inline double discriminator_loss(const Mlp& discriminator, const Matrix& real_z, const Matrix& real_b,
                                 const Matrix& fake_z, const Matrix& fake_b, Mlp* grads = nullptr) {
  require(real_z.cols() == fake_z.cols() && real_b.cols() == fake_b.cols() && real_z.cols() == real_b.cols(),
          "discriminator_loss: real and fake batches must have equal size");
  const Index B = real_z.cols();
  Matrix input(real_z.rows() + real_b.rows(), 2 * B);
  input << real_z, fake_z, real_b, fake_b;
  Vector target(2 * B);
  target.head(B).setOnes();
  target.tail(B).setZero();
  MlpCache cache;
  const Vector logits = mlp_forward(discriminator, input, grads ? &cache : nullptr).row(0).transpose();
  const double loss = binary_cross_entropy(logits, target);
  if (!std::isfinite(loss)) throw NumericError("disc_loss", "discriminator loss is not finite");
  if (grads) {
    const Vector g = binary_cross_entropy_grad(logits, target, Vector::Ones(2 * B));
    mlp_backward(discriminator, cache, g.transpose(), grads);
  }
  return loss;
}

inline std::pair<Matrix, Matrix> fake_samples(TcFakeMode mode, const LatentBatch& real, Rng& rng) {
  const Index B = real.z_sample.cols();
  if (mode == TcFakeMode::prior)
    return {standard_normal(real.z_sample.rows(), B, rng), uniform01(real.b_sample.rows(), B, rng)};
  std::vector<Index> perm(static_cast<std::size_t>(B));
  for (Index i = 0; i < B; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix b(real.b_sample.rows(), B);
  for (Index i = 0; i < B; ++i) b.col(i) = real.b_sample.col(perm[static_cast<std::size_t>(i)]);
  return {real.z_sample, b};
}

/// Batch-mean cross-entropies standing in for H(y | r_m) and H(y | b),
/// before the xi / beta weights.
inline std::pair<double, double> umi_terms(const Vector& rm_logits, const Vector& b_head_logits, const Vector& y) {
  return {binary_cross_entropy(rm_logits, y), binary_cross_entropy(b_head_logits, y)};
}

struct LossBreakdown {
  double recon_x = 0.0;
  double recon_a = 0.0;       // alpha-weighted
  double kl = 0.0;            // (1 + lambda)-weighted
  double tc = 0.0;            // gamma-weighted
  double h_y_given_rm = 0.0;  // xi-weighted
  double h_y_given_b = 0.0;   // beta-weighted
  double supervised = 0.0;
  double total = 0.0;

  /// Fixed summation order; `total` is always produced by this function.
  double sum_terms() const {
    return recon_x + recon_a + kl + tc + h_y_given_rm + h_y_given_b + supervised;
  }
};

/// w_b = 1 - p(y | b), where p(y|b) is the b-head probability of the observed label.
inline Vector supervision_weights(const Vector& b_head_logits, const Vector& y) {
  Vector w(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double p1 = sigmoid(b_head_logits[i]);
    w[i] = y[i] > 0.5 ? 1.0 - p1 : p1;
  }
  return w;
}

namespace detail {
inline void check_term(const char* name, double v) {
  if (!std::isfinite(v)) throw NumericError(name, std::string("loss term '") + name + "' is not finite");
}
}  // namespace detail

/// The tractable objective
///   recon_x + alpha*recon_a + (1+lambda)*KL + gamma*TC
///   + xi*H(y|r_m) + beta*H(y|b) + mean(w_b * CE(f(z), y)).
/// When `grads` is given, accumulates gradients for the model networks only;
/// the discriminator is read but never differentiated, and w_b is a constant.
inline LossBreakdown dbrf_loss(const DbrfNetworks& nets, const Mlp& discriminator, const ArchConfig& arch,
                               const Batch& batch, const Hyperparams& hyper, const NoiseDraw& noise,
                               const LossTerms& terms = {}, DbrfNetworks* grads = nullptr,
                               LatentBatch* latent_out = nullptr) {
  const Index B = batch.x.cols();
  require(B > 0, "dbrf_loss: empty batch");
  require(batch.y.size() == B && batch.a.cols() == B, "dbrf_loss: batch fields disagree on size");
  require(batch.x.rows() == arch.input_dim, "dbrf_loss: feature dimension mismatch");
  require(batch.a.rows() == arch.sensitive_dim, "dbrf_loss: sensitive dimension mismatch");
  const double inv_b = 1.0 / static_cast<double>(B);
  const bool need_grad = grads != nullptr;
  const auto onehot = arch.onehot_mask();

  EncoderCache enc_cache;
  LatentBatch lat = encode(nets.encoder, batch.x, noise.eps_z, noise.eps_b, need_grad ? &enc_cache : nullptr);
  const Matrix zb = stack_rows(lat.z_sample, lat.b_sample);

  LossBreakdown out;

  MlpCache xdec_cache;
  const Matrix x_hat = mlp_forward(nets.x_decoder, zb, need_grad ? &xdec_cache : nullptr);
  out.recon_x = mixed_recon_per_example(x_hat, batch.x, onehot).mean();

  MlpCache adec_cache;
  const Matrix a_logits = mlp_forward(nets.a_decoder, lat.b_sample, need_grad ? &adec_cache : nullptr);
  out.recon_a = hyper.alpha * bce_per_example(a_logits, batch.a).mean();

  const Vector kl_ex = gaussian_kl(lat.z_head) + gaussian_kl(lat.b_head);
  out.kl = (1.0 + hyper.lambda) * kl_ex.mean();

  MlpCache disc_cache;
  if (hyper.gamma != 0.0) {
    const Matrix d_logits = mlp_forward(discriminator, zb, need_grad ? &disc_cache : nullptr);
    out.tc = hyper.gamma * d_logits.mean();
  }

  MlpCache rm_cache;
  Vector rm_logits;
  if (terms.umi_rm || latent_out) {
    rm_logits = mlp_forward(nets.rm_decoder, lat.z_sample, need_grad ? &rm_cache : nullptr).row(0).transpose();
  }
  if (terms.umi_rm) out.h_y_given_rm = hyper.xi * binary_cross_entropy(rm_logits, batch.y);

  MlpCache yb_cache;
  Vector yb_logits;
  if (terms.umi_b || terms.supervised) {
    yb_logits = mlp_forward(nets.y_from_b, lat.b_sample, need_grad ? &yb_cache : nullptr,
                            noise.drop_b.empty() ? nullptr : &noise.drop_b)
                    .row(0)
                    .transpose();
  }
  if (terms.umi_b) out.h_y_given_b = hyper.beta * binary_cross_entropy(yb_logits, batch.y);

  MlpCache yz_cache;
  Vector yz_logits, w_b;
  if (terms.supervised) {
    yz_logits = mlp_forward(nets.y_from_z, lat.z_sample, need_grad ? &yz_cache : nullptr,
                            noise.drop_z.empty() ? nullptr : &noise.drop_z)
                    .row(0)
                    .transpose();
    w_b = supervision_weights(yb_logits, batch.y);
    out.supervised = binary_cross_entropy(yz_logits, batch.y, w_b);
  }

  detail::check_term("recon_x", out.recon_x);
  detail::check_term("recon_a", out.recon_a);
  detail::check_term("kl", out.kl);
  detail::check_term("tc", out.tc);
  detail::check_term("h_y_rm", out.h_y_given_rm);
  detail::check_term("h_y_b", out.h_y_given_b);
  detail::check_term("supervised", out.supervised);
  out.total = out.sum_terms();

  if (latent_out) {
    *latent_out = lat;
    latent_out->rm_logit = rm_logits;
  }
  if (!need_grad) return out;

  const Index dz = arch.z_dim;
  const Index db = arch.b_dim;
  Matrix d_z = Matrix::Zero(dz, B);
  Matrix d_b = Matrix::Zero(db, B);

  {
    const Matrix g = mixed_recon_grad(x_hat, batch.x, onehot, inv_b);
    const Matrix d_zb = mlp_backward(nets.x_decoder, xdec_cache, g, &grads->x_decoder);
    d_z += d_zb.topRows(dz);
    d_b += d_zb.bottomRows(db);
  }
  if (hyper.alpha != 0.0) {
    const Matrix g = bce_per_example_grad(a_logits, batch.a, Vector::Constant(B, hyper.alpha * inv_b));
    d_b += mlp_backward(nets.a_decoder, adec_cache, g, &grads->a_decoder);
  }
  if (hyper.gamma != 0.0) {
    const Matrix g = Matrix::Constant(1, B, hyper.gamma * inv_b);
    const Matrix d_zb = mlp_backward(discriminator, disc_cache, g, nullptr);
    d_z += d_zb.topRows(dz);
    d_b += d_zb.bottomRows(db);
  }
  if (terms.umi_rm && hyper.xi != 0.0) {
    const Vector g = binary_cross_entropy_grad(rm_logits, batch.y, Vector::Constant(B, hyper.xi));
    d_z += mlp_backward(nets.rm_decoder, rm_cache, g.transpose(), &grads->rm_decoder);
  }
  if (terms.umi_b && hyper.beta != 0.0) {
    const Vector g = binary_cross_entropy_grad(yb_logits, batch.y, Vector::Constant(B, hyper.beta));
    d_b += mlp_backward(nets.y_from_b, yb_cache, g.transpose(), &grads->y_from_b);
  }
  if (terms.supervised) {
    const Vector g = binary_cross_entropy_grad(yz_logits, batch.y, w_b);
    d_z += mlp_backward(nets.y_from_z, yz_cache, g.transpose(), &grads->y_from_z);
  }

  const Vector kl_scale = Vector::Constant(B, (1.0 + hyper.lambda) * inv_b);
  const auto rz = reparameterize_backward(lat.z_head, noise.eps_z, d_z);
  const auto rb = reparameterize_backward(lat.b_head, noise.eps_b, d_b);
  const auto kz = gaussian_kl_backward(lat.z_head, kl_scale);
  const auto kb = gaussian_kl_backward(lat.b_head, kl_scale);

  const Encoder& enc = nets.encoder;
  Encoder& ge = grads->encoder;
  Matrix d_h = dense_backward(enc.mu_z, enc_cache.mu_z, rz.mu + kz.mu, &ge.mu_z);
  d_h += dense_backward(enc.log_var_z, enc_cache.log_var_z, rz.log_var + kz.log_var, &ge.log_var_z);
  d_h += dense_backward(enc.mu_b, enc_cache.mu_b, rb.mu + kb.mu, &ge.mu_b);
  d_h += dense_backward(enc.log_var_b, enc_cache.log_var_b, rb.log_var + kb.log_var, &ge.log_var_b);
  dense_backward(enc.hidden, enc_cache.hidden, d_h, &ge.hidden);
  return out;
}

inline LossBreakdown dbrf_loss(const ModelParams& p, const Batch& batch, const Hyperparams& hyper,
                               const NoiseDraw& noise, const LossTerms& terms = {}, DbrfNetworks* grads = nullptr) {
  return dbrf_loss(p.nets, p.discriminator, p.arch, batch, hyper, noise, terms, grads);
}

}  // namespace dbrf
