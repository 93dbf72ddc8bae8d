#include "dbrf/core/adam.hpp"
#include "dbrf/core/grad_check.hpp"
#include "dbrf/data/synthetic.hpp"
#include "dbrf/data/split.hpp"
#include "dbrf/model/dbrf.hpp"
#include "dbrf/model/serialize.hpp"
#include "dbrf/train/trainer.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstring>

using namespace dbrf;

namespace {

// Five inputs (three continuous, two one-hot), two sensitive bits.
ArchConfig small_arch() {
  ArchConfig a;
  a.input_dim = 5;
  a.onehot = {false, false, false, true, true};
  a.sensitive_dim = 2;
  a.z_dim = 3;
  a.b_dim = 2;
  a.hidden = 8;
  a.dropout = 0.2;
  return a;
}

Batch toy_batch(Index B, Rng& rng) {
  Batch b;
  b.x = standard_normal(5, B, rng);
  const Matrix u = uniform01(4, B, rng);
  for (Index j = 0; j < B; ++j) {
    b.x(3, j) = u(0, j) < 0.5 ? 1.0 : 0.0;
    b.x(4, j) = 1.0 - b.x(3, j);
  }
  b.a = (u.bottomRows(2).array() < 0.4).cast<double>().matrix();
  b.y.resize(B);
  for (Index j = 0; j < B; ++j) b.y[j] = u(1, j) < 0.5 ? 1.0 : 0.0;
  return b;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool all_zero(Mlp& net) {
  std::vector<std::span<double>> v;
  collect_tensors(net, v);
  for (auto s : v)
    for (double x : s)
      if (x != 0.0) return false;
  return true;
}

void zero_mlp(Mlp& net) {
  for (auto& l : net.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
}

// Discriminator trained by Adam on a fixed real sampler against the prior.
template <class RealSampler>
Mlp train_discriminator(Index dz, Index db, RealSampler real, int steps, Rng& rng) {
  Mlp d = make_mlp({dz + db, 16, 1}, rng);
  OptimizerState opt(AdamSettings{5e-3});
  for (int t = 0; t < steps; ++t) {
    const auto [rz, rb] = real(128);
    const Matrix fz = standard_normal(dz, 128, rng);
    const Matrix fb = uniform01(db, 128, rng);
    Mlp g = zeroed_copy(d);
    discriminator_loss(d, rz, rb, fz, fb, &g);
    adam_step(d, g, opt);
  }
  return d;
}

}  // namespace

// ---- encoder ---------------------------------------------------------------------

TEST(Encode, ZeroWeightsGiveUnitGaussianHeadsAndSampleEqualsNoise) {
  Rng rng(1);
  ModelParams p = make_model(small_arch(), 3);
  for (DenseLayer* l : {&p.nets.encoder.mu_z, &p.nets.encoder.log_var_z, &p.nets.encoder.mu_b, &p.nets.encoder.log_var_b}) {
    l->weights.setZero();
    l->bias.setZero();
  }
  const Batch b = toy_batch(6, rng);
  const NoiseDraw n = draw_noise(p.arch, 6, rng);
  const LatentBatch lat = encode(p, b.x, n);
  EXPECT_TRUE(lat.z_head.mu.isZero());
  EXPECT_TRUE(lat.b_head.log_var.isZero());
  EXPECT_TRUE(bit_equal(lat.z_sample, n.eps_z));
  EXPECT_TRUE(bit_equal(lat.b_sample, n.eps_b));
}

TEST(Encode, FixedNoiseIsDeterministicAndShapesFollowArch) {
  Rng rng(2);
  const ModelParams p = make_model(small_arch(), 5);
  const Batch b = toy_batch(7, rng);
  const NoiseDraw n = draw_noise(p.arch, 7, rng);
  const LatentBatch l1 = encode(p, b.x, n), l2 = encode(p, b.x, n);
  EXPECT_TRUE(bit_equal(l1.z_sample, l2.z_sample));
  EXPECT_TRUE(bit_equal(l1.b_sample, l2.b_sample));
  EXPECT_EQ(l1.z_sample.rows(), 3);
  EXPECT_EQ(l1.b_sample.rows(), 2);
  EXPECT_EQ(l1.z_sample.cols(), 7);
}

TEST(Encode, WrongInputWidthIsConfigError) {
  Rng rng(3);
  const ModelParams p = make_model(small_arch(), 5);
  const NoiseDraw n = draw_noise(p.arch, 2, rng);
  EXPECT_THROW(encode(p, Matrix::Zero(4, 2), n), ConfigError);
}

TEST(ModelInit, SameSeedSameParametersDifferentSeedDifferent) {
  ModelParams a = make_model(small_arch(), 9), b = make_model(small_arch(), 9), c = make_model(small_arch(), 10);
  EXPECT_EQ(parameter_hash(a), parameter_hash(b));
  EXPECT_NE(parameter_hash(a), parameter_hash(c));
}

// ---- decoders and predictions -------------------------------------------------------

TEST(Decoders, ZeroWeightsDecodeToZeroAndSensitiveShapeFollowsK) {
  Rng rng(4);
  ModelParams p = make_model(small_arch(), 7);
  zero_mlp(p.nets.x_decoder);
  const Matrix x_hat = decode_x(p, standard_normal(3, 4, rng), standard_normal(2, 4, rng));
  EXPECT_TRUE(x_hat.isZero());
  EXPECT_EQ(x_hat.rows(), 5);
  EXPECT_EQ(decode_a(p, standard_normal(2, 4, rng)).rows(), 2);
}

TEST(Decoders, RmTieGoesToZeroAndPositiveBiasToOne) {
  Rng rng(5);
  ModelParams p = make_model(small_arch(), 7);
  zero_mlp(p.nets.rm_decoder);
  const Matrix x = standard_normal(5, 3, rng);
  EXPECT_EQ(predict_ideal(p, x), (Bits{0, 0, 0}));
  p.nets.rm_decoder.layers.back().bias[0] = 5.0;
  EXPECT_EQ(predict_ideal(p, x), (Bits{1, 1, 1}));
  EXPECT_EQ(threshold_logits(Vector{{0.0, 1e-300, -1e-300}}), (Bits{0, 1, 0}));
}

TEST(Decoders, PredictionIsInvariantToPositiveScalingOfTheLastRmLayer) {
  Rng rng(6);
  ModelParams p = make_model(small_arch(), 11);
  p.nets.rm_decoder.layers.back().bias[0] = 0.05;
  const Matrix x = standard_normal(5, 300, rng);
  const Bits before = predict_ideal(p, x);
  for (double c : {0.01, 0.5, 3.0, 1e4}) {
    ModelParams q = p;
    q.nets.rm_decoder.layers.back().weights *= c;
    q.nets.rm_decoder.layers.back().bias *= c;
    EXPECT_EQ(predict_ideal(q, x), before) << "scale " << c;
  }
}

TEST(Decoders, OverfitsEightRowsAtPosteriorMeans) {
  Rng rng(7);
  Batch b = toy_batch(8, rng);
  TrainConfig cfg;
  cfg.seed = 17;
  cfg.z_dim = 4;
  cfg.b_dim = 2;
  cfg.hidden = 64;
  cfg.dropout = 0.0;
  cfg.lr_model = 3e-3;
  ArchConfig arch = small_arch();
  arch.z_dim = 4;
  arch.hidden = 64;
  arch.dropout = 0.0;
  TrainerState s = make_trainer_state(arch, cfg);
  for (int t = 0; t < 30000; ++t) train_step(s, b, Hyperparams{}, cfg);
  const auto [mz, mb] = encode_means(s.params.nets.encoder, b.x);
  const Vector per_row = mixed_recon_per_example(decode_x(s.params, mz, mb), b.x, arch.onehot_mask());
  // The one-hot pair contributes BCE, so a perfect fit still costs > 0.
  EXPECT_LT(per_row.mean(), 0.05);
}

// At alpha=1 the b channel has no incentive to carry a: the drop in recon_a is
// at most I(a;b) <= E[KL_b], which the objective charges at 1 + lambda > alpha.
// alpha=5 makes the trade worthwhile, and a is then recovered near its Bayes rate.
TEST(Decoders, SensitiveReconstructionFromBIsPredictive) {
  SyntheticSpec spec;
  spec.seed = 31;
  const auto tt = split(generate_synthetic(spec), 0.9, 32);
  const auto st = standardize(tt.train, tt.test);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.eval_every = 0;
  cfg.seed = 33;
  cfg.z_dim = 4;
  cfg.b_dim = 2;
  cfg.lr_model = 5e-4;
  const FitResult fit_result = fit(cfg, Hyperparams{5.0, 1.0, 0.1, 0.1, 0.1}, st.train, st.test);
  const Matrix x = features_by_column(st.test);
  const Matrix logits = decode_a(fit_result.params, encode_means(fit_result.params.nets.encoder, x).second);
  std::size_t hit = 0;
  for (Index j = 0; j < logits.cols(); ++j)
    hit += static_cast<std::size_t>((logits(0, j) > 0.0) == (st.test.sensitive(j, 0) != 0));
  EXPECT_GT(static_cast<double>(hit) / static_cast<double>(logits.cols()), 0.7);
}

// ---- total correlation ----------------------------------------------------------------

TEST(TotalCorrelation, ZeroDiscriminatorGivesZeroAndConstantLogitGivesIt) {
  Rng rng(8);
  ModelParams p = make_model(small_arch(), 13);
  LatentBatch lat;
  lat.z_sample = standard_normal(3, 10, rng);
  lat.b_sample = standard_normal(2, 10, rng);
  zero_mlp(p.discriminator);
  EXPECT_EQ(tc_estimate(p, lat), 0.0);
  p.discriminator.layers.back().bias[0] = 1.7;
  EXPECT_DOUBLE_EQ(tc_estimate(p, lat), 1.7);
}

TEST(TotalCorrelation, VanishesWhenRealAndFakeShareADistribution) {
  Rng rng(9);
  auto prior = [&](Index B) { return std::pair{standard_normal(3, B, rng), uniform01(2, B, rng)}; };
  const Mlp d = train_discriminator(3, 2, prior, 1500, rng);
  LatentBatch lat;
  std::tie(lat.z_sample, lat.b_sample) = prior(20000);
  EXPECT_NEAR(tc_estimate(d, lat), 0.0, 0.1);
  const auto [fz, fb] = prior(20000);
  EXPECT_NEAR(discriminator_loss(d, lat.z_sample, lat.b_sample, fz, fb), std::log(2.0), 0.05);
}

TEST(Discriminator, ZeroWeightsGiveLogTwo) {
  Rng rng(10);
  Mlp d = make_mlp({5, 8, 1}, rng);
  zero_mlp(d);
  const double loss = discriminator_loss(d, standard_normal(3, 6, rng), standard_normal(2, 6, rng),
                                         standard_normal(3, 6, rng), standard_normal(2, 6, rng));
  EXPECT_NEAR(loss, std::log(2.0), 1e-15);
}

TEST(Discriminator, SeparableSamplesDriveLossDown) {
  Rng rng(11);
  auto shifted = [&](Index B) {
    return std::pair{Matrix((standard_normal(3, B, rng).array() + 4.0).matrix()), uniform01(2, B, rng)};
  };
  const Mlp d = train_discriminator(3, 2, shifted, 800, rng);
  const auto [rz, rb] = shifted(4000);
  EXPECT_LT(discriminator_loss(d, rz, rb, standard_normal(3, 4000, rng), uniform01(2, 4000, rng)), 0.1);
}

TEST(Discriminator, GradientMatchesCentralDifferences) {
  Rng rng(12);
  Mlp d = make_mlp({5, 6, 1}, rng);
  const Matrix rz = standard_normal(3, 5, rng), rb = standard_normal(2, 5, rng);
  const Matrix fz = standard_normal(3, 5, rng), fb = standard_normal(2, 5, rng);
  auto loss = [&](const Mlp& q, Mlp* g) { return discriminator_loss(q, rz, rb, fz, fb, g); };
  EXPECT_LE(grad_check(loss, d).max_relative_error, 1e-4);
}

TEST(Discriminator, PermuteModeKeepsZAndShufflesB) {
  Rng rng(13);
  LatentBatch real;
  real.z_sample = standard_normal(3, 50, rng);
  real.b_sample = standard_normal(2, 50, rng);
  const auto [fz, fb] = fake_samples(TcFakeMode::permute, real, rng);
  EXPECT_TRUE(bit_equal(fz, real.z_sample));
  EXPECT_NEAR(fb.sum(), real.b_sample.sum(), 1e-12);
  EXPECT_FALSE(bit_equal(fb, real.b_sample));
  const auto [pz, pb] = fake_samples(TcFakeMode::prior, real, rng);
  EXPECT_GE(pb.minCoeff(), 0.0);
  EXPECT_LT(pb.maxCoeff(), 1.0);
  EXPECT_EQ(pz.rows(), 3);
}

// ---- uncertain-mutual-information terms -------------------------------------------------

TEST(UmiTerms, ConfidentCorrectHeadsGiveZero) {
  const auto [h_rm, h_b] = umi_terms(Vector{{40.0, -40.0}}, Vector{{40.0, -40.0}}, Vector{{1.0, 0.0}});
  EXPECT_LT(h_rm, 1e-15);
  EXPECT_LT(h_b, 1e-15);
}

TEST(UmiTerms, UninformativeHeadsGiveLogTwo) {
  const auto [h_rm, h_b] = umi_terms(Vector::Zero(4), Vector::Zero(4), Vector{{1.0, 0.0, 0.0, 1.0}});
  EXPECT_NEAR(h_rm, std::log(2.0), 1e-15);
  EXPECT_NEAR(h_b, std::log(2.0), 1e-15);
}

namespace {

// Exact joint p(y, r, b) over binary variables, stored as counts over n examples.
struct DiscreteJoint {
  std::array<std::array<std::array<int, 2>, 2>, 2> count{};  // [y][r][b]
  int n = 0;

  double p(int y, int r, int b) const { return static_cast<double>(count[y][r][b]) / n; }
  double py(int y) const { return p(y, 0, 0) + p(y, 0, 1) + p(y, 1, 0) + p(y, 1, 1); }
  double pyr(int y, int r) const { return p(y, r, 0) + p(y, r, 1); }
  double pyb(int y, int b) const { return p(y, 0, b) + p(y, 1, b); }
  double pr(int r) const { return pyr(0, r) + pyr(1, r); }
  double pb(int b) const { return pyb(0, b) + pyb(1, b); }

  // Mutual information straight from its definition.
  double mi_ry() const {
    double s = 0.0;
    for (int y = 0; y < 2; ++y)
      for (int r = 0; r < 2; ++r)
        if (pyr(y, r) > 0) s += pyr(y, r) * std::log(pyr(y, r) / (py(y) * pr(r)));
    return s;
  }
  double mi_by() const {
    double s = 0.0;
    for (int y = 0; y < 2; ++y)
      for (int b = 0; b < 2; ++b)
        if (pyb(y, b) > 0) s += pyb(y, b) * std::log(pyb(y, b) / (py(y) * pb(b)));
    return s;
  }
  double h_y() const { return -(py(0) * std::log(py(0)) + py(1) * std::log(py(1))); }
};

DiscreteJoint random_joint(Rng& rng) {
  DiscreteJoint j;
  std::uniform_int_distribution<int> c(20, 400);
  for (auto& a : j.count)
    for (auto& b : a)
      for (int& x : b) {
        x = c(rng);
        j.n += x;
      }
  return j;
}

// Examples realizing the joint exactly, with each head reporting the true conditional.
void realize(const DiscreteJoint& j, Vector& y, Vector& rm_logit, Vector& b_logit) {
  y.resize(j.n);
  rm_logit.resize(j.n);
  b_logit.resize(j.n);
  Index i = 0;
  for (int yy = 0; yy < 2; ++yy)
    for (int r = 0; r < 2; ++r)
      for (int b = 0; b < 2; ++b)
        for (int k = 0; k < j.count[yy][r][b]; ++k, ++i) {
          const double p_r = j.pyr(1, r) / j.pr(r);
          const double p_b = j.pyb(1, b) / j.pb(b);
          y[i] = yy;
          rm_logit[i] = std::log(p_r / (1.0 - p_r));
          b_logit[i] = std::log(p_b / (1.0 - p_b));
        }
}

}  // namespace

// The tractable objective drops the constant (xi + beta) H(y) from the
// information-bottleneck form -xi I(r_m;y) - beta I(b;y) (KL is common to both).
TEST(UmiTerms, DifferFromTheInformationFormByTheLabelEntropyConstant) {
  Rng rng(14);
  for (int trial = 0; trial < 25; ++trial) {
    const DiscreteJoint j = random_joint(rng);
    Vector y, rm, bl;
    realize(j, y, rm, bl);
    const auto [h_rm, h_b] = umi_terms(rm, bl, y);
    for (auto [xi, beta] : {std::pair{0.1, 0.1}, std::pair{0.3, 0.9}, std::pair{1.0, 0.0}}) {
      const double l_umi = xi * h_rm + beta * h_b;
      const double l_ib = -xi * j.mi_ry() - beta * j.mi_by();
      EXPECT_NEAR(l_umi - l_ib, (xi + beta) * j.h_y(), 1e-10) << "trial " << trial;
    }
  }
}

TEST(UmiTerms, MonteCarloPlugInEntropiesRecoverTheConstant) {
  Rng rng(15);
  const DiscreteJoint j = random_joint(rng);
  // Sample the joint, estimate every quantity from empirical frequencies.
  std::discrete_distribution<int> cell({static_cast<double>(j.count[0][0][0]), static_cast<double>(j.count[0][0][1]),
                                        static_cast<double>(j.count[0][1][0]), static_cast<double>(j.count[0][1][1]),
                                        static_cast<double>(j.count[1][0][0]), static_cast<double>(j.count[1][0][1]),
                                        static_cast<double>(j.count[1][1][0]), static_cast<double>(j.count[1][1][1])});
  DiscreteJoint est;
  for (int i = 0; i < 200000; ++i) {
    const int c = cell(rng);
    ++est.count[c >> 2][(c >> 1) & 1][c & 1];
    ++est.n;
  }
  Vector y, rm, bl;
  realize(est, y, rm, bl);
  const auto [h_rm, h_b] = umi_terms(rm, bl, y);
  const double xi = 0.4, beta = 0.6;
  const double gap = (xi * h_rm + beta * h_b) - (-xi * est.mi_ry() - beta * est.mi_by());
  EXPECT_NEAR(gap, (xi + beta) * j.h_y(), 1e-2);
}

// ---- full objective ---------------------------------------------------------------------

TEST(DbrfLoss, TotalIsTheFixedOrderSumOfTerms) {
  Rng rng(16);
  const ModelParams p = make_model(small_arch(), 17);
  const Batch b = toy_batch(12, rng);
  const LossBreakdown l = dbrf_loss(p, b, Hyperparams{}, draw_noise(p.arch, 12, rng));
  const double s = l.recon_x + l.recon_a + l.kl + l.tc + l.h_y_given_rm + l.h_y_given_b + l.supervised;
  EXPECT_EQ(std::memcmp(&s, &l.total, sizeof(double)), 0);
}

TEST(DbrfLoss, DisabledTermsContributeNothing) {
  Rng rng(17);
  const ModelParams p = make_model(small_arch(), 19);
  const Batch b = toy_batch(12, rng);
  const NoiseDraw n = draw_noise(p.arch, 12, rng);
  const LossBreakdown l = dbrf_loss(p, b, Hyperparams{1.0, 1.0, 0.1, 0.0, 0.0}, n, LossTerms{false, false, false});
  EXPECT_EQ(l.h_y_given_rm, 0.0);
  EXPECT_EQ(l.h_y_given_b, 0.0);
  EXPECT_EQ(l.supervised, 0.0);
  EXPECT_DOUBLE_EQ(l.total, l.recon_x + l.recon_a + l.kl + l.tc);
}

TEST(DbrfLoss, LinearInXiAndBeta) {
  Rng rng(18);
  const ModelParams p = make_model(small_arch(), 23);
  const Batch b = toy_batch(12, rng);
  const NoiseDraw n = draw_noise(p.arch, 12, rng);
  const double base = dbrf_loss(p, b, Hyperparams{1, 1, 0.1, 0.0, 0.0}, n).total;
  const double only_xi = dbrf_loss(p, b, Hyperparams{1, 1, 0.1, 0.0, 1.0}, n).total - base;
  const double only_beta = dbrf_loss(p, b, Hyperparams{1, 1, 0.1, 1.0, 0.0}, n).total - base;
  const double both = dbrf_loss(p, b, Hyperparams{1, 1, 0.1, 0.35, 0.35}, n).total - base;
  EXPECT_NEAR(both, 0.35 * (only_xi + only_beta), 1e-12);
  const double swapped_a = dbrf_loss(p, b, Hyperparams{1, 1, 0.1, 0.2, 0.7}, n).total - base;
  const double swapped_b = dbrf_loss(p, b, Hyperparams{1, 1, 0.1, 0.7, 0.2}, n).total - base;
  EXPECT_NEAR(swapped_a - swapped_b, 0.5 * (only_xi - only_beta), 1e-12);
}

TEST(DbrfLoss, ConfidentBHeadNullifiesTheSupervisedTerm) {
  Rng rng(19);
  ModelParams p = make_model(small_arch(), 29);
  Batch b = toy_batch(10, rng);
  b.y.setOnes();
  zero_mlp(p.nets.y_from_b);
  p.nets.y_from_b.layers.back().bias[0] = 60.0;
  const NoiseDraw n = draw_noise(p.arch, 10, rng);
  DbrfNetworks g = zeroed_copy(p.nets);
  const LossBreakdown l = dbrf_loss(p, b, Hyperparams{}, n, LossTerms{}, &g);
  EXPECT_LT(l.supervised, 1e-20);
  EXPECT_LT(g.y_from_z.layers.back().weights.cwiseAbs().maxCoeff(), 1e-20);
}

TEST(DbrfLoss, SupervisionWeightsLieInUnitIntervalAndShrinkWithConfidence) {
  Rng rng(20);
  const Vector logits = (standard_normal(200, 1, rng) * 5.0).col(0);
  Vector y(200);
  for (Index i = 0; i < 200; ++i) y[i] = i % 2;
  const Vector w = supervision_weights(logits, y);
  EXPECT_GE(w.minCoeff(), 0.0);
  EXPECT_LE(w.maxCoeff(), 1.0);
  // More confidence in the observed label never raises its weight.
  for (double l = -10.0; l < 10.0; l += 0.5) {
    EXPECT_GE(supervision_weights(Vector{{l}}, Vector{{1.0}})[0], supervision_weights(Vector{{l + 0.5}}, Vector{{1.0}})[0]);
    EXPECT_LE(supervision_weights(Vector{{l}}, Vector{{0.0}})[0], supervision_weights(Vector{{l + 0.5}}, Vector{{0.0}})[0]);
  }
}

TEST(DbrfLoss, SupervisedTermIsNonDecreasingInEachWeight) {
  Rng rng(21);
  const Vector logits = (standard_normal(8, 1, rng) * 3.0).col(0);
  const Vector y{{1, 0, 1, 1, 0, 0, 1, 0}};
  Vector w = uniform01(8, 1, rng).col(0);
  for (Index i = 0; i < 8; ++i) {
    const double before = binary_cross_entropy(logits, y, w);
    Vector up = w;
    up[i] = std::min(1.0, w[i] + 0.3);
    EXPECT_GE(binary_cross_entropy(logits, y, up), before);
  }
}

TEST(DbrfLoss, WeightsAreDetachedFromTheBHead) {
  Rng rng(22);
  const ModelParams p = make_model(small_arch(), 31);
  const Batch b = toy_batch(12, rng);
  const NoiseDraw n = draw_noise(p.arch, 12, rng);
  DbrfNetworks g = zeroed_copy(p.nets);
  dbrf_loss(p, b, Hyperparams{}, n, LossTerms{false, false, true}, &g);
  EXPECT_TRUE(all_zero(g.y_from_b));
  EXPECT_TRUE(all_zero(g.rm_decoder));
  EXPECT_FALSE(all_zero(g.y_from_z));
}

TEST(DbrfLoss, ZeroAlphaLeavesTheSensitiveDecoderUntouched) {
  Rng rng(23);
  const ModelParams p = make_model(small_arch(), 37);
  const Batch b = toy_batch(12, rng);
  const NoiseDraw n = draw_noise(p.arch, 12, rng);
  DbrfNetworks g = zeroed_copy(p.nets);
  dbrf_loss(p, b, Hyperparams{0.0, 1.0, 0.1, 0.1, 0.1}, n, LossTerms{}, &g);
  EXPECT_TRUE(all_zero(g.a_decoder));
}

TEST(DbrfLoss, ZeroGammaIgnoresTheDiscriminator) {
  Rng rng(24);
  ModelParams p = make_model(small_arch(), 41);
  const Batch b = toy_batch(12, rng);
  const NoiseDraw n = draw_noise(p.arch, 12, rng);
  const Hyperparams h{1.0, 0.0, 0.1, 0.1, 0.1};
  DbrfNetworks g1 = zeroed_copy(p.nets), g2 = zeroed_copy(p.nets);
  const double l1 = dbrf_loss(p, b, h, n, LossTerms{}, &g1).total;
  p.discriminator = make_mlp({5, 8, 1}, rng);
  p.discriminator.layers.back().bias[0] = 100.0;
  const double l2 = dbrf_loss(p, b, h, n, LossTerms{}, &g2).total;
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(parameter_hash(g1), parameter_hash(g2));
}

TEST(DbrfLoss, NonFiniteInputNamesTheFirstTerm) {
  Rng rng(25);
  const ModelParams p = make_model(small_arch(), 43);
  Batch b = toy_batch(4, rng);
  b.x(0, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    dbrf_loss(p, b, Hyperparams{}, draw_noise(p.arch, 4, rng));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.term, "recon_x");
  }
}

TEST(DbrfLoss, MismatchedBatchIsConfigError) {
  Rng rng(26);
  const ModelParams p = make_model(small_arch(), 47);
  Batch b = toy_batch(4, rng);
  b.y.resize(3);
  EXPECT_THROW(dbrf_loss(p, b, Hyperparams{}, draw_noise(p.arch, 4, rng)), ConfigError);
}

class FullLossGradient : public ::testing::TestWithParam<int> {};

TEST_P(FullLossGradient, MatchesCentralDifferencesOnSixteenExamples) {
  Rng rng(static_cast<std::uint64_t>(100 + GetParam()));
  const ModelParams p = make_model(small_arch(), static_cast<std::uint64_t>(200 + GetParam()));
  const Batch b = toy_batch(16, rng);
  const NoiseDraw n = draw_noise(p.arch, 16, rng);
  const Hyperparams h{0.8, 0.7, 0.3, 0.4, 0.6};
  // w_b is a constant of differentiation, so the finite-difference side must
  // hold it at its base-point value too.
  LatentBatch base;
  dbrf_loss(p.nets, p.discriminator, p.arch, b, h, n, LossTerms{}, nullptr, &base);
  const Vector w0 = supervision_weights(
      mlp_forward(p.nets.y_from_b, base.b_sample, nullptr, &n.drop_b).row(0).transpose(), b.y);
  auto loss = [&](const DbrfNetworks& q, DbrfNetworks* g) {
    LatentBatch lat;
    const LossBreakdown l = dbrf_loss(q, p.discriminator, p.arch, b, h, n, LossTerms{}, g, &lat);
    const Vector yz = mlp_forward(q.y_from_z, lat.z_sample, nullptr, &n.drop_z).row(0).transpose();
    return l.total - l.supervised + binary_cross_entropy(yz, b.y, w0);
  };
  const auto r = grad_check(loss, p.nets, 1e-5);
  EXPECT_LE(r.max_relative_error, 1e-3) << "tensor " << r.worst_tensor << " entry " << r.worst_entry << " analytic "
                                        << r.analytic << " numeric " << r.numeric;
  EXPECT_EQ(r.entries_checked, parameter_count(const_cast<DbrfNetworks&>(p.nets)));
}

INSTANTIATE_TEST_SUITE_P(Seeds, FullLossGradient, ::testing::Values(0, 1, 2));

// ---- serialization ------------------------------------------------------------------------

TEST(ModelSerialization, RoundTripIsBitExactAndManifestCountsParameters) {
  Rng rng(27);
  ModelParams p = make_model(small_arch(), 53);
  const Hyperparams h{0.5, 2.0, 0.2, 0.3, 0.4};
  const auto j = nlohmann::json::parse(model_to_json(p, h, {{"note", "x"}}).dump());
  ModelParams q = model_from_json(j);
  EXPECT_EQ(parameter_hash(p), parameter_hash(q));
  EXPECT_EQ(q.arch.onehot, p.arch.onehot);
  EXPECT_EQ(j.at("manifest").at("parameter_count").get<std::size_t>(), parameter_count(p));
  EXPECT_DOUBLE_EQ(hyper_from_json(j.at("manifest").at("hyperparams")).gamma, 2.0);
  const Matrix x = standard_normal(5, 50, rng);
  EXPECT_EQ(predict_ideal(p, x), predict_ideal(q, x));
}

TEST(ModelSerialization, RejectsForeignOrMismatchedDocuments) {
  ModelParams p = make_model(small_arch(), 59);
  auto j = model_to_json(p, Hyperparams{});
  auto bad = j;
  bad["format"] = "other";
  EXPECT_THROW(model_from_json(bad), ConfigError);
  bad = j;
  bad["manifest"]["architecture"]["hidden"] = 9;
  EXPECT_THROW(model_from_json(bad), ConfigError);
}
