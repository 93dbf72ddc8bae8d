#pragma once

#include "dbrf/core/adam.hpp"
#include "dbrf/metrics/fairness.hpp"
#include "dbrf/model/serialize.hpp"

#include <limits>
#include <numeric>
#include <optional>

namespace dbrf {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double lr_model = 1e-3;
  double lr_disc = 1e-3;
  std::size_t disc_steps_per_model_step = 1;
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;  // 0: final record only
  TcFakeMode tc_fake = TcFakeMode::prior;
  std::size_t early_stopping_patience = 0;  // 0: disabled
  LossTerms terms;
  Index z_dim = 8;
  Index b_dim = 4;
  Index hidden = 64;
  double dropout = 0.2;
  std::string checkpoint_path;  // empty: nothing persisted

  void validate() const {
    require(batch_size > 0, "batch_size must be positive");
    require(lr_model > 0.0 && lr_disc > 0.0, "learning rates must be positive");
    require(z_dim > 0 && b_dim > 0 && hidden > 0, "latent and hidden sizes must be positive");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  }
};

/// Architecture fitted to a dataset's columns and sensitive bits.
inline ArchConfig arch_for(const TabularDataset& data, const TrainConfig& cfg) {
  ArchConfig a;
  a.input_dim = static_cast<Index>(data.cols());
  a.onehot = data.onehot_mask();
  a.sensitive_dim = static_cast<Index>(data.sensitive_count());
  a.z_dim = cfg.z_dim;
  a.b_dim = cfg.b_dim;
  a.hidden = cfg.hidden;
  a.dropout = cfg.dropout;
  a.validate();
  return a;
}

/// Which head produces bit predictions during evaluation.
enum class PredictionSource { rm, z_head };

inline PredictionSource default_prediction_source(const LossTerms& t) {
  return t.umi_rm || !t.supervised ? PredictionSource::rm : PredictionSource::z_head;
}

inline Bits predict(const ModelParams& p, const Matrix& x, PredictionSource src) {
  return src == PredictionSource::rm ? predict_ideal(p, x) : predict_from_z_head(p, x);
}

/// Metrics against one evaluation split. Undefined values are NaN.
struct EvalMetrics {
  double acc_observed = std::numeric_limits<double>::quiet_NaN();
  double acc_ideal = std::numeric_limits<double>::quiet_NaN();
  double dp = std::numeric_limits<double>::quiet_NaN();
  double deo = std::numeric_limits<double>::quiet_NaN();
};

/// Metrics of a bit predictor on `data`. DEO is measured against the
/// ideal labels when present, otherwise the observed ones.
inline EvalMetrics evaluate_predictions(const Bits& pred, const TabularDataset& data) {
  EvalMetrics m;
  const Bits group = group_bits(data);
  m.acc_observed = accuracy(pred, data.observed_labels);
  if (data.ideal_labels) m.acc_ideal = accuracy(pred, *data.ideal_labels);
  const Bits& ref = data.ideal_labels ? *data.ideal_labels : data.observed_labels;
  try {
    m.dp = delta_dp({pred, ref, group});
  } catch (const MetricError&) {
  }
  try {
    m.deo = deo({pred, ref, group});
  } catch (const MetricError&) {
  }
  return m;
}

inline Matrix features_by_column(const TabularDataset& data) { return data.features.transpose(); }

inline EvalMetrics evaluate(const ModelParams& p, const TabularDataset& data, PredictionSource src) {
  return evaluate_predictions(predict(p, features_by_column(data), src), data);
}

/// One evaluation point: epoch-averaged training loss terms, mean
/// discriminator loss and test-split metrics.
struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double disc_loss = std::numeric_limits<double>::quiet_NaN();
  EvalMetrics test;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
};

inline const std::vector<std::string>& history_columns() {
  static const std::vector<std::string> cols{"epoch",      "recon_x",   "recon_a",      "kl",
                                             "tc",         "h_y_rm",    "h_y_b",        "supervised",
                                             "disc_loss",  "acc_observed", "acc_ideal", "dp",
                                             "deo"};
  return cols;
}

inline void write_history_csv(const TrainingHistory& h, std::ostream& os) {
  csv::write_row(os, history_columns());
  for (const auto& r : h.records) {
    const double v[] = {r.loss.recon_x,   r.loss.recon_a,  r.loss.kl,         r.loss.tc,
                        r.loss.h_y_given_rm, r.loss.h_y_given_b, r.loss.supervised, r.disc_loss,
                        r.test.acc_observed, r.test.acc_ideal,   r.test.dp,         r.test.deo};
    std::vector<std::string> row{std::to_string(r.epoch)};
    for (double x : v) row.push_back(csv::format_double(x));
    csv::write_row(os, row);
  }
}

inline TrainingHistory read_history_csv(std::istream& is) {
  TrainingHistory h;
  std::string line;
  if (!csv::read_record(is, line)) throw IngestionError(0, "history: empty file");
  if (csv::split(line, ',', false) != history_columns()) throw IngestionError(1, "history: unexpected header");
  std::size_t row = 1;
  while (csv::read_record(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split(line, ',', false);
    if (f.size() != history_columns().size()) throw IngestionError(row, "history: wrong field count");
    std::vector<double> v;
    for (std::size_t i = 1; i < f.size(); ++i) v.push_back(csv::parse_double(f[i], row));
    EpochRecord r;
    r.epoch = static_cast<std::size_t>(csv::parse_double(f[0], row));
    r.loss = {v[0], v[1], v[2], v[3], v[4], v[5], v[6], 0.0};
    r.loss.total = r.loss.sum_terms();
    r.disc_loss = v[7];
    r.test = {v[8], v[9], v[10], v[11]};
    h.records.push_back(r);
  }
  return h;
}

/// Everything needed to continue a run exactly where it stopped.
struct TrainerState {
  ModelParams params;
  OptimizerState model_opt;
  OptimizerState disc_opt;
  Rng rng;
  std::size_t epochs_done = 0;
  std::int64_t steps = 0;
  TrainingHistory history;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;
};

inline TrainerState make_trainer_state(const ArchConfig& arch, const TrainConfig& cfg) {
  cfg.validate();
  TrainerState s;
  s.params = make_model(arch, mix_seed(cfg.seed, 0));
  s.model_opt = OptimizerState(AdamSettings{cfg.lr_model});
  s.disc_opt = OptimizerState(AdamSettings{cfg.lr_disc});
  s.rng = Rng(mix_seed(cfg.seed, 1));
  return s;
}

struct StepResult {
  LossBreakdown loss;
  double disc_loss = std::numeric_limits<double>::quiet_NaN();  // mean over discriminator updates
};

namespace detail {
template <class Params>
void check_gradients(Params& grads, const char* what) {
  if (!all_parameters_finite(grads)) throw NumericError(what, std::string(what) + ": gradient is not finite");
}
}  // namespace detail

/// Discriminator update(s) against fresh encoder samples. Touches only the
/// discriminator and its optimizer. Returns the mean loss, NaN when disabled.
inline double discriminator_step(TrainerState& s, const Batch& batch, const TrainConfig& cfg) {
  if (cfg.disc_steps_per_model_step == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto& arch = s.params.arch;
  const Index B = batch.x.cols();
  double sum = 0.0;
  for (std::size_t k = 0; k < cfg.disc_steps_per_model_step; ++k) {
    const Matrix eps_z = standard_normal(arch.z_dim, B, s.rng);
    const Matrix eps_b = standard_normal(arch.b_dim, B, s.rng);
    const LatentBatch real = encode(s.params.nets.encoder, batch.x, eps_z, eps_b);
    const auto [fz, fb] = fake_samples(cfg.tc_fake, real, s.rng);
    Mlp g = zeroed_copy(s.params.discriminator);
    sum += discriminator_loss(s.params.discriminator, real.z_sample, real.b_sample, fz, fb, &g);
    detail::check_gradients(g, "disc_loss");
    adam_step(s.params.discriminator, g, s.disc_opt);
  }
  return sum / static_cast<double>(cfg.disc_steps_per_model_step);
}

/// One model update with the discriminator frozen; w_b comes from the
/// current b-head.
inline LossBreakdown model_step(TrainerState& s, const Batch& batch, const Hyperparams& hyper, const TrainConfig& cfg) {
  const auto& arch = s.params.arch;
  const NoiseDraw noise = draw_noise(arch, batch.x.cols(), s.rng, true);
  DbrfNetworks g = zeroed_copy(s.params.nets);
  const LossBreakdown loss = dbrf_loss(s.params.nets, s.params.discriminator, arch, batch, hyper, noise, cfg.terms, &g);
  detail::check_gradients(g, "total");
  adam_step(s.params.nets, g, s.model_opt);
  ++s.steps;
  return loss;
}

inline StepResult train_step(TrainerState& s, const Batch& batch, const Hyperparams& hyper, const TrainConfig& cfg) {
  StepResult out;
  out.disc_loss = discriminator_step(s, batch, cfg);
  out.loss = model_step(s, batch, hyper, cfg);
  return out;
}

// ---- checkpoint -----------------------------------------------------------

inline std::string rng_to_string(const Rng& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

inline Rng rng_from_string(const std::string& text) {
  Rng r;
  std::istringstream is(text);
  is >> r;
  if (!is) throw ConfigError("checkpoint: malformed rng state");
  return r;
}

inline nlohmann::json history_to_json(const TrainingHistory& h) {
  std::ostringstream os;
  write_history_csv(h, os);
  return os.str();
}

inline TrainingHistory history_from_json(const nlohmann::json& j) {
  std::istringstream is(j.get<std::string>());
  return read_history_csv(is);
}

inline nlohmann::json trainer_state_to_json(TrainerState& s, const Hyperparams& h, const nlohmann::json& config = {}) {
  nlohmann::json j = model_to_json(s.params, h, config);
  j["trainer"] = {{"model_optimizer", optimizer_to_json(s.model_opt)},
                  {"disc_optimizer", optimizer_to_json(s.disc_opt)},
                  {"rng", rng_to_string(s.rng)},
                  {"epochs_done", s.epochs_done},
                  {"steps", s.steps},
                  {"history", history_to_json(s.history)},
                  {"best_loss", std::isfinite(s.best_loss) ? nlohmann::json(s.best_loss) : nlohmann::json()},
                  {"epochs_since_best", s.epochs_since_best}};
  return j;
}

inline TrainerState trainer_state_from_json(const nlohmann::json& j) {
  TrainerState s;
  s.params = model_from_json(j);
  const auto& t = j.at("trainer");
  s.model_opt = optimizer_from_json(t.at("model_optimizer"));
  s.disc_opt = optimizer_from_json(t.at("disc_optimizer"));
  s.rng = rng_from_string(t.at("rng").get<std::string>());
  s.epochs_done = t.at("epochs_done").get<std::size_t>();
  s.steps = t.at("steps").get<std::int64_t>();
  s.history = history_from_json(t.at("history"));
  s.best_loss = t.at("best_loss").is_null() ? std::numeric_limits<double>::infinity() : t.at("best_loss").get<double>();
  s.epochs_since_best = t.at("epochs_since_best").get<std::size_t>();
  return s;
}

inline void save_checkpoint(TrainerState& s, const Hyperparams& h, const std::string& path,
                            const nlohmann::json& config = {}) {
  write_json_file(trainer_state_to_json(s, h, config), path);
}

inline TrainerState load_checkpoint(const std::string& path) { return trainer_state_from_json(read_json_file(path)); }

// ---- fit ------------------------------------------------------------------

struct FitResult {
  ModelParams params;
  TrainingHistory history;
};

/// Runs epochs `s.epochs_done + 1 .. cfg.epochs`. An epoch is a shuffled
/// pass in mini-batches; the last batch may be short.
inline void fit(TrainerState& s, const TrainConfig& cfg, const Hyperparams& hyper, const TabularDataset& train,
                const TabularDataset& test, const nlohmann::json& config_json = {}) {
  cfg.validate();
  hyper.validate();
  require(train.rows() > 0, "fit: empty training set");
  require(cfg.batch_size <= train.rows(), "fit: batch_size exceeds training set size");
  require(train.cols() == static_cast<std::size_t>(s.params.arch.input_dim), "fit: feature count differs from model");
  const PredictionSource src = default_prediction_source(cfg.terms);
  std::vector<std::size_t> order(train.rows());
  bool stopped = false;
  while (s.epochs_done < cfg.epochs && !stopped) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), s.rng);
    LossBreakdown sum;
    double disc_sum = 0.0;
    std::size_t nb = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Batch batch = make_batch(train, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                                     order.begin() + static_cast<std::ptrdiff_t>(end)));
      const StepResult r = train_step(s, batch, hyper, cfg);
      sum.recon_x += r.loss.recon_x;
      sum.recon_a += r.loss.recon_a;
      sum.kl += r.loss.kl;
      sum.tc += r.loss.tc;
      sum.h_y_given_rm += r.loss.h_y_given_rm;
      sum.h_y_given_b += r.loss.h_y_given_b;
      sum.supervised += r.loss.supervised;
      disc_sum += r.disc_loss;
      ++nb;
    }
    ++s.epochs_done;
    const double inv = 1.0 / static_cast<double>(nb);
    LossBreakdown avg{sum.recon_x * inv,      sum.recon_a * inv,      sum.kl * inv,         sum.tc * inv,
                      sum.h_y_given_rm * inv, sum.h_y_given_b * inv, sum.supervised * inv, 0.0};
    avg.total = avg.sum_terms();

    if (cfg.early_stopping_patience > 0) {
      if (avg.total < s.best_loss) {
        s.best_loss = avg.total;
        s.epochs_since_best = 0;
      } else if (++s.epochs_since_best >= cfg.early_stopping_patience) {
        stopped = true;
      }
    }
    const bool last = s.epochs_done == cfg.epochs || stopped;
    const bool periodic = cfg.eval_every > 0 && s.epochs_done % cfg.eval_every == 0;
    if (periodic || last) {
      EpochRecord rec;
      rec.epoch = s.epochs_done;
      rec.loss = avg;
      rec.disc_loss = cfg.disc_steps_per_model_step > 0 ? disc_sum * inv : std::numeric_limits<double>::quiet_NaN();
      if (test.rows() > 0) rec.test = evaluate(s.params, test, src);
      s.history.records.push_back(rec);
      if (!cfg.checkpoint_path.empty()) save_checkpoint(s, hyper, cfg.checkpoint_path, config_json);
    }
  }
}

inline FitResult fit(const TrainConfig& cfg, const Hyperparams& hyper, const TabularDataset& train,
                     const TabularDataset& test, const nlohmann::json& config_json = {}) {
  TrainerState s = make_trainer_state(arch_for(train, cfg), cfg);
  fit(s, cfg, hyper, train, test, config_json);
  return {std::move(s.params), std::move(s.history)};
}

}  // namespace dbrf
