#pragma once

#include "dbrf/baselines/baselines.hpp"
#include "dbrf/data/corruption.hpp"
#include "dbrf/data/split.hpp"
#include "dbrf/data/synthetic.hpp"
#include "dbrf/data/tabular.hpp"

#include <cstdlib>
#include <filesystem>

namespace dbrf {

inline constexpr const char* kDataDirEnv = "DBRF_DATA_DIR";

/// Where dataset files live: the explicit setting, then the environment
/// variable, then "./data".
inline std::string resolve_data_dir(const std::string& configured = {}) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return "data";
}

enum class Method { dbrf_star, dbrf_lr, vae_lr, raw_lr };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::dbrf_star: return "dbrf_star";
    case Method::dbrf_lr: return "dbrf_lr";
    case Method::vae_lr: return "vae_lr";
    case Method::raw_lr: return "raw_lr";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (auto m : {Method::dbrf_star, Method::dbrf_lr, Method::vae_lr, Method::raw_lr})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + s + "' (expected dbrf_star, dbrf_lr, vae_lr or raw_lr)");
}

/// Everything that determines a run's numbers. Its canonical JSON form is
/// hashed into every results row.
struct ExperimentConfig {
  std::string dataset = "synthetic";  // synthetic | adult | compas
  std::string grouping;               // empty: the schema's first grouping
  std::string data_dir;               // empty: resolve_data_dir()
  std::string schema_dir = "schemas";
  std::size_t synthetic_n = 10800;
  double synthetic_phi = 5.1;
  std::uint64_t data_seed = 7;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;

  Hyperparams hyper;
  // beta = beta_low below beta_switch_rho, beta_high at or above it.
  bool beta_schedule = true;
  double beta_low = 0.1;
  double beta_high = 0.5;
  double beta_switch_rho = 0.35;

  TrainConfig train;
  LogisticConfig logistic;

  std::vector<double> rho_values{0.0, 0.1, 0.2, 0.3, 0.4, 0.45};
  std::vector<Method> methods{Method::dbrf_star, Method::dbrf_lr, Method::vae_lr, Method::raw_lr};
  std::size_t folds = 3;
  std::size_t threads = 1;

  void validate() const {
    require(dataset == "synthetic" || dataset == "adult" || dataset == "compas",
            "dataset must be synthetic, adult or compas");
    require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
    require(!rho_values.empty(), "rho_values must be non-empty");
    for (double r : rho_values) require(r >= 0.0 && r < 0.5, "every rho must lie in [0, 0.5)");
    require(!methods.empty(), "methods must be non-empty");
    require(folds >= 1, "folds must be at least 1");
    require(threads >= 1, "threads must be at least 1");
    hyper.validate();
    train.validate();
  }

  /// Hyperparameters for one corruption rate.
  Hyperparams hyper_for(double rho) const {
    Hyperparams h = hyper;
    if (beta_schedule) h.beta = rho >= beta_switch_rho ? beta_high : beta_low;
    return h;
  }
};

inline std::string to_string(TcFakeMode m) { return m == TcFakeMode::prior ? "prior" : "permute"; }

inline TcFakeMode tc_fake_from_string(const std::string& s) {
  if (s == "prior") return TcFakeMode::prior;
  if (s == "permute") return TcFakeMode::permute;
  throw ConfigError("tc_fake must be prior or permute");
}

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr_model", t.lr_model},
          {"lr_disc", t.lr_disc},
          {"disc_steps_per_model_step", t.disc_steps_per_model_step},
          {"eval_every", t.eval_every},
          {"tc_fake", to_string(t.tc_fake)},
          {"early_stopping_patience", t.early_stopping_patience},
          {"terms", {{"umi_rm", t.terms.umi_rm}, {"umi_b", t.terms.umi_b}, {"supervised", t.terms.supervised}}},
          {"z_dim", t.z_dim},
          {"b_dim", t.b_dim},
          {"hidden", t.hidden},
          {"dropout", t.dropout}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig t = {}) {
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.lr_model = j.value("lr_model", t.lr_model);
  t.lr_disc = j.value("lr_disc", t.lr_disc);
  t.disc_steps_per_model_step = j.value("disc_steps_per_model_step", t.disc_steps_per_model_step);
  t.eval_every = j.value("eval_every", t.eval_every);
  if (j.contains("tc_fake")) t.tc_fake = tc_fake_from_string(j.at("tc_fake").get<std::string>());
  t.early_stopping_patience = j.value("early_stopping_patience", t.early_stopping_patience);
  if (j.contains("terms")) {
    const auto& m = j.at("terms");
    t.terms.umi_rm = m.value("umi_rm", t.terms.umi_rm);
    t.terms.umi_b = m.value("umi_b", t.terms.umi_b);
    t.terms.supervised = m.value("supervised", t.terms.supervised);
  }
  t.z_dim = j.value("z_dim", t.z_dim);
  t.b_dim = j.value("b_dim", t.b_dim);
  t.hidden = j.value("hidden", t.hidden);
  t.dropout = j.value("dropout", t.dropout);
  t.validate();
  return t;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.push_back(to_string(m));
  return {{"dataset", c.dataset},
          {"grouping", c.grouping},
          {"synthetic", {{"n", c.synthetic_n}, {"phi", c.synthetic_phi}}},
          {"data_seed", c.data_seed},
          {"train_fraction", c.train_fraction},
          {"seed", c.seed},
          {"hyper", to_json(c.hyper)},
          {"beta_schedule",
           {{"enabled", c.beta_schedule}, {"low", c.beta_low}, {"high", c.beta_high}, {"switch_rho", c.beta_switch_rho}}},
          {"train", to_json(c.train)},
          {"logistic",
           {{"epochs", c.logistic.epochs},
            {"batch_size", c.logistic.batch_size},
            {"learning_rate", c.logistic.learning_rate}}},
          {"rho_values", c.rho_values},
          {"methods", methods},
          {"folds", c.folds}};
}

/// Missing keys keep their defaults. Location keys (data_dir, schema_dir)
/// and the thread count are read but excluded from the hash form.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
  try {
    c.dataset = j.value("dataset", c.dataset);
    c.grouping = j.value("grouping", c.grouping);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.schema_dir = j.value("schema_dir", c.schema_dir);
    if (j.contains("synthetic")) {
      c.synthetic_n = j["synthetic"].value("n", c.synthetic_n);
      c.synthetic_phi = j["synthetic"].value("phi", c.synthetic_phi);
    }
    c.data_seed = j.value("data_seed", c.data_seed);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("hyper")) c.hyper = hyper_from_json(j.at("hyper"), c.hyper);
    if (j.contains("beta_schedule")) {
      const auto& b = j.at("beta_schedule");
      c.beta_schedule = b.value("enabled", c.beta_schedule);
      c.beta_low = b.value("low", c.beta_low);
      c.beta_high = b.value("high", c.beta_high);
      c.beta_switch_rho = b.value("switch_rho", c.beta_switch_rho);
    }
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("logistic")) {
      const auto& l = j.at("logistic");
      c.logistic.epochs = l.value("epochs", c.logistic.epochs);
      c.logistic.batch_size = l.value("batch_size", c.logistic.batch_size);
      c.logistic.learning_rate = l.value("learning_rate", c.logistic.learning_rate);
    }
    if (j.contains("rho_values")) c.rho_values = j.at("rho_values").get<std::vector<double>>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
    }
    c.folds = j.value("folds", c.folds);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_json_file(path));
}

/// FNV-1a of the canonical (key-sorted, compact) JSON form, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Defaults per dataset: latent sizes and the synthetic learning rate.
inline ExperimentConfig default_config(const std::string& dataset) {
  ExperimentConfig c;
  c.dataset = dataset;
  if (dataset == "synthetic") {
    c.train.z_dim = 4;
    c.train.b_dim = 2;
    c.train.lr_model = 5e-4;
  }
  c.train.eval_every = 0;
  c.validate();
  return c;
}

inline std::string default_grouping(const std::string& dataset) {
  if (dataset == "adult") return "sex";
  if (dataset == "compas") return "race";
  return "";
}

/// Full dataset with ideal labels. Real datasets take their published
/// labels as the clean ones.
inline TabularDataset load_experiment_dataset(const ExperimentConfig& c) {
  if (c.dataset == "synthetic") {
    SyntheticSpec s;
    s.n = c.synthetic_n;
    s.rotation_phi = c.synthetic_phi;
    s.seed = c.data_seed;
    return generate_synthetic(s);
  }
  namespace fs = std::filesystem;
  const fs::path dir = resolve_data_dir(c.data_dir);
  const fs::path file = dir / (c.dataset == "adult" ? "adult.data" : "compas-scores-two-years.csv");
  const fs::path schema = fs::path(c.schema_dir) / (c.dataset + ".json");
  if (!fs::exists(file)) throw IngestionError(0, "dataset file '" + file.string() + "' not found");
  const std::string grouping = c.grouping.empty() ? default_grouping(c.dataset) : c.grouping;
  return with_labels_as_ideal(load_tabular(file.string(), TabularSchema::load(schema.string()), grouping));
}

}  // namespace dbrf
