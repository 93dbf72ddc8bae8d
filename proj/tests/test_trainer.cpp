#include "dbrf/data/split.hpp"
#include "dbrf/data/synthetic.hpp"
#include "dbrf/experiment/config.hpp"
#include "dbrf/train/trainer.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace dbrf;

namespace {

Standardized synthetic_split(std::uint64_t seed, std::size_t n = 10800) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  const TrainTest tt = split(generate_synthetic(spec), 0.9, seed + 1);
  return standardize(tt.train, tt.test);
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.epochs = 3;
  c.batch_size = 64;
  c.z_dim = 3;
  c.b_dim = 2;
  c.hidden = 16;
  c.eval_every = 1;
  return c;
}

std::string history_text(const TrainingHistory& h) {
  std::ostringstream os;
  write_history_csv(h, os);
  return os.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dbrf_test_" + name)).string();
}

}  // namespace

TEST(TrainStep, WithoutDiscriminatorAndGammaZeroIsPlainWeightedVaeTraining) {
  const Standardized d = synthetic_split(1, 600);
  TrainConfig cfg = small_config(2);
  cfg.disc_steps_per_model_step = 0;
  const Hyperparams h{1.0, 0.0, 0.1, 0.1, 0.1};
  const ArchConfig arch = arch_for(d.train, cfg);
  TrainerState s = make_trainer_state(arch, cfg);
  const std::uint64_t disc_before = parameter_hash(s.params.discriminator);

  // Reference loop built from the objective and optimizer alone.
  ModelParams ref = make_model(arch, mix_seed(cfg.seed, 0));
  OptimizerState opt(AdamSettings{cfg.lr_model});
  Rng rng(mix_seed(cfg.seed, 1));
  const Batch batch = make_batch(d.train, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  for (int t = 0; t < 25; ++t) {
    train_step(s, batch, h, cfg);
    const NoiseDraw n = draw_noise(arch, batch.x.cols(), rng, true);
    DbrfNetworks g = zeroed_copy(ref.nets);
    dbrf_loss(ref.nets, ref.discriminator, arch, batch, h, n, cfg.terms, &g);
    adam_step(ref.nets, g, opt);
  }
  EXPECT_EQ(parameter_hash(s.params.nets), parameter_hash(ref.nets));
  EXPECT_EQ(parameter_hash(s.params.discriminator), disc_before);
}

TEST(TrainStep, UpdatesAlternateStrictly) {
  const Standardized d = synthetic_split(3, 600);
  const TrainConfig cfg = small_config(4);
  TrainerState s = make_trainer_state(arch_for(d.train, cfg), cfg);
  const Batch batch = make_batch(d.train, {3, 5, 7, 11, 13, 17, 19, 23});
  for (int t = 0; t < 5; ++t) {
    const std::uint64_t nets0 = parameter_hash(s.params.nets), disc0 = parameter_hash(s.params.discriminator);
    discriminator_step(s, batch, cfg);
    const std::uint64_t nets1 = parameter_hash(s.params.nets), disc1 = parameter_hash(s.params.discriminator);
    EXPECT_EQ(nets1, nets0);
    EXPECT_NE(disc1, disc0);
    model_step(s, batch, Hyperparams{}, cfg);
    EXPECT_NE(parameter_hash(s.params.nets), nets1);
    EXPECT_EQ(parameter_hash(s.params.discriminator), disc1);
  }
}

// The total cannot fall by 90%: every nat the encoder spends on x is charged
// at 1 + lambda, more than it saves on a near-Gaussian x. The checks are that the
// objective falls, and that it ends below the best x-ignoring model on these rows.
TEST(TrainStep, MemorizesSixteenExamples) {
  const Standardized d = synthetic_split(5, 600);
  TrainConfig cfg = small_config(6);
  cfg.hidden = 64;
  cfg.z_dim = 4;
  cfg.dropout = 0.0;
  cfg.disc_steps_per_model_step = 0;
  const Hyperparams h{1.0, 0.0, 0.1, 0.1, 0.1};
  TrainerState s = make_trainer_state(arch_for(d.train, cfg), cfg);
  std::vector<std::size_t> rows(16);
  for (std::size_t i = 0; i < 16; ++i) rows[i] = i * 7;
  const Batch batch = make_batch(d.train, rows);
  double at_ten = 0.0, last = 0.0;
  for (int t = 1; t <= 2000; ++t) {
    const double total = train_step(s, batch, h, cfg).loss.total;
    if (t == 10) at_ten = total;
    last = total;
  }

  // Oracle: posterior at the prior, decoders at batch means and base rates.
  auto entropy = [](double q) { return q <= 0.0 || q >= 1.0 ? 0.0 : -q * std::log(q) - (1 - q) * std::log(1 - q); };
  double floor = 0.0;
  for (Index c = 0; c < batch.x.rows(); ++c) {
    const double m = batch.x.row(c).mean();
    floor += 0.5 * (batch.x.row(c).array() - m).square().mean();
  }
  for (Index k = 0; k < batch.a.rows(); ++k) floor += h.alpha * entropy(batch.a.row(k).mean());
  const double q = batch.y.mean();
  floor += (h.xi + h.beta) * entropy(q);
  // b-head at q makes w_b = 1 - q for positives and q for negatives; the best
  // constant f(z) then sees equal weighted mass on both labels.
  floor += q * (1 - q) * 2.0 * std::log(2.0);

  EXPECT_LE(last, 0.9 * at_ten) << "step 10: " << at_ten << ", step 2000: " << last;
  EXPECT_LT(last, floor) << "x-ignoring floor " << floor;
}

TEST(TrainStep, NonFiniteInputAbortsNamingTheTerm) {
  const Standardized d = synthetic_split(7, 600);
  TrainConfig cfg = small_config(8);
  Batch batch = make_batch(d.train, {0, 1, 2, 3});
  batch.x(1, 2) = std::numeric_limits<double>::infinity();
  TrainerState s = make_trainer_state(arch_for(d.train, cfg), cfg);
  try {
    train_step(s, batch, Hyperparams{}, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.term, "disc_loss");
  }
  cfg.disc_steps_per_model_step = 0;
  try {
    train_step(s, batch, Hyperparams{}, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.term, "recon_x");
  }
}

TEST(Fit, FixedSeedGivesIdenticalHistory) {
  const Standardized d = synthetic_split(9, 1200);
  const TrainConfig cfg = small_config(10);
  const FitResult a = fit(cfg, Hyperparams{}, d.train, d.test);
  FitResult b = fit(cfg, Hyperparams{}, d.train, d.test);
  EXPECT_EQ(history_text(a.history), history_text(b.history));
  ModelParams pa = a.params;
  EXPECT_EQ(parameter_hash(pa), parameter_hash(b.params));
}

TEST(Fit, EvalEveryZeroKeepsOnlyTheFinalRecord) {
  const Standardized d = synthetic_split(11, 600);
  TrainConfig cfg = small_config(12);
  cfg.eval_every = 0;
  cfg.epochs = 4;
  const FitResult r = fit(cfg, Hyperparams{}, d.train, d.test);
  ASSERT_EQ(r.history.records.size(), 1u);
  EXPECT_EQ(r.history.records[0].epoch, 4u);
}

TEST(Fit, PeriodicEvaluationRecordsBothLabelViews) {
  const Standardized d = synthetic_split(13, 600);
  TrainConfig cfg = small_config(14);
  cfg.epochs = 4;
  cfg.eval_every = 2;
  const FitResult r = fit(cfg, Hyperparams{}, d.train, d.test);
  ASSERT_EQ(r.history.records.size(), 2u);
  for (const auto& rec : r.history.records) {
    EXPECT_TRUE(std::isfinite(rec.test.acc_observed));
    EXPECT_TRUE(std::isfinite(rec.test.acc_ideal));
    EXPECT_TRUE(std::isfinite(rec.disc_loss));
    EXPECT_DOUBLE_EQ(rec.loss.total, rec.loss.sum_terms());
  }
}

TEST(Fit, BatchLargerThanTrainingSetIsConfigError) {
  const Standardized d = synthetic_split(15, 100);
  TrainConfig cfg = small_config(16);
  cfg.batch_size = 1000;
  EXPECT_THROW(fit(cfg, Hyperparams{}, d.train, d.test), ConfigError);
}

TEST(Fit, EarlyStoppingEndsAStalledRun) {
  const Standardized d = synthetic_split(17, 600);
  TrainConfig cfg = small_config(18);
  cfg.epochs = 60;
  cfg.lr_model = 1e-12;
  cfg.lr_disc = 1e-12;
  cfg.early_stopping_patience = 2;
  const FitResult r = fit(cfg, Hyperparams{}, d.train, d.test);
  ASSERT_FALSE(r.history.records.empty());
  EXPECT_LT(r.history.records.back().epoch, 60u);
}

TEST(Checkpoint, ResumingWithNoEpochsLeftIsBitIdentical) {
  const Standardized d = synthetic_split(19, 600);
  TrainConfig cfg = small_config(20);
  cfg.checkpoint_path = temp_path("resume_zero.json");
  FitResult r = fit(cfg, Hyperparams{}, d.train, d.test);
  TrainerState s = load_checkpoint(cfg.checkpoint_path);
  fit(s, cfg, Hyperparams{}, d.train, d.test);
  EXPECT_EQ(parameter_hash(s.params), parameter_hash(r.params));
  EXPECT_EQ(history_text(s.history), history_text(r.history));
  std::remove(cfg.checkpoint_path.c_str());
}

TEST(Checkpoint, InterruptedRunContinuesExactly) {
  const Standardized d = synthetic_split(21, 600);
  TrainConfig cfg = small_config(22);
  cfg.epochs = 4;
  FitResult whole = fit(cfg, Hyperparams{}, d.train, d.test);

  TrainConfig first = cfg;
  first.epochs = 2;
  first.checkpoint_path = temp_path("resume_mid.json");
  fit(first, Hyperparams{}, d.train, d.test);
  TrainerState s = load_checkpoint(first.checkpoint_path);
  EXPECT_EQ(s.epochs_done, 2u);
  fit(s, cfg, Hyperparams{}, d.train, d.test);
  EXPECT_EQ(parameter_hash(s.params), parameter_hash(whole.params));
  EXPECT_EQ(history_text(s.history), history_text(whole.history));
  std::remove(first.checkpoint_path.c_str());
}

TEST(History, CsvRoundTripKeepsEveryColumn) {
  TrainingHistory h;
  EpochRecord r;
  r.epoch = 7;
  r.loss = LossBreakdown{0.1 + 0.2, 1.5, 2.25, -0.125, 0.3, 0.4, 0.05, 0.0};
  r.loss.total = r.loss.sum_terms();
  r.disc_loss = 0.6931;
  r.test.acc_observed = 0.8;
  r.test.dp = 0.02;
  h.records.push_back(r);
  std::istringstream is(history_text(h));
  const TrainingHistory back = read_history_csv(is);
  ASSERT_EQ(back.records.size(), 1u);
  EXPECT_EQ(back.records[0].epoch, 7u);
  EXPECT_EQ(back.records[0].loss.recon_x, r.loss.recon_x);
  EXPECT_EQ(back.records[0].loss.tc, -0.125);
  EXPECT_TRUE(std::isnan(back.records[0].test.acc_ideal));
  EXPECT_TRUE(std::isnan(back.records[0].test.deo));
  EXPECT_EQ(history_text(back), history_text(h));
  std::istringstream header(history_text(h).substr(0, history_text(h).find('\n')));
  std::string first_line;
  std::getline(header, first_line);
  EXPECT_EQ(first_line, "epoch,recon_x,recon_a,kl,tc,h_y_rm,h_y_b,supervised,disc_loss,acc_observed,acc_ideal,dp,deo");
}

// Training-curve oracle on synthetic defaults: the 5-epoch moving average of
// recon_x never rises by more than 5%.
TEST(Fit, ReconstructionCurveIsNonIncreasingUnderSmoothing) {
  const Standardized d = synthetic_split(23);
  TrainConfig cfg = default_config("synthetic").train;
  cfg.epochs = 50;
  cfg.eval_every = 1;
  cfg.seed = 24;
  const FitResult r = fit(cfg, default_config("synthetic").hyper_for(0.0), d.train, d.test);
  ASSERT_EQ(r.history.records.size(), 50u);
  std::vector<double> smooth;
  for (std::size_t i = 4; i < r.history.records.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = i - 4; k <= i; ++k) s += r.history.records[k].loss.recon_x;
    smooth.push_back(s / 5.0);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_LE(smooth[i], 1.05 * smooth[i - 1]) << "window ending " << i + 4;
  EXPECT_LT(smooth.back(), smooth.front());
}

TEST(Fit, CleanSyntheticReachesTheSanityFloor) {
  const Standardized d = synthetic_split(25);
  TrainConfig cfg = default_config("synthetic").train;
  cfg.epochs = 100;
  cfg.eval_every = 0;
  cfg.seed = 26;
  const FitResult r = fit(cfg, default_config("synthetic").hyper_for(0.0), d.train, d.test);
  EXPECT_GE(r.history.records.back().test.acc_ideal, 0.85);
}
