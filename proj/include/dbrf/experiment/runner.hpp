#pragma once

#include "dbrf/experiment/config.hpp"
#include "dbrf/experiment/kernel_pca.hpp"
#include "dbrf/experiment/svg.hpp"

#include <atomic>
#include <bit>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

namespace dbrf {

// ---- seeds and folds --------------------------------------------------------

inline std::uint64_t split_seed(const ExperimentConfig& c, std::size_t fold) { return mix_seed(c.seed, 2 * fold); }

inline std::uint64_t corruption_seed(const ExperimentConfig& c, std::size_t fold, double rho) {
  return mix_seed(split_seed(c, fold), std::bit_cast<std::uint64_t>(rho));
}

inline std::uint64_t model_seed(const ExperimentConfig& c, std::size_t fold) { return mix_seed(c.seed, 2 * fold + 1); }

/// Train split corrupted at rate rho (both directions, protected group =
/// conjunction of the sensitive bits), test split clean, both standardized
/// with training statistics.
inline Standardized prepare_fold(const ExperimentConfig& c, const TabularDataset& data, std::size_t fold, double rho) {
  TrainTest tt = split(data, c.train_fraction, split_seed(c, fold));
  TabularDataset train =
      rho > 0.0 ? inject_label_bias(tt.train, CorruptionSpec::symmetric(rho, corruption_seed(c, fold, rho))) : tt.train;
  return standardize(train, tt.test);
}

/// Delta-DP of the clean labels themselves.
inline double clean_delta_dp(const TabularDataset& data) {
  const Bits& y = evaluation_labels(data);
  return delta_dp({y, y, group_bits(data)});
}

// ---- thread pool --------------------------------------------------------------

/// Runs job(i) for i in [0, n) on up to `threads` workers. Each job writes
/// only its own output slot; the first exception is rethrown after joining.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- results --------------------------------------------------------------------

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResultRow {
  std::string dataset;
  std::string method;
  double rho = 0.0;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  double accuracy = kNaN;
  double delta_dp = kNaN;
  double deo = kNaN;
  std::string config_hash;
  std::string error;  // empty on success

  bool ok() const { return error.empty() && std::isfinite(accuracy); }
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"dataset", "method", "rho",  "fold",       "seed",
                                             "accuracy", "delta_dp", "deo", "config_hash"};
  return cols;
}

inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  csv::write_row(os, result_columns());
  for (const auto& r : rows)
    csv::write_row(os, {r.dataset, r.method, csv::format_double(r.rho), std::to_string(r.fold), std::to_string(r.seed),
                        csv::format_double(r.accuracy), csv::format_double(r.delta_dp), csv::format_double(r.deo),
                        r.config_hash});
}

inline std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!csv::read_record(is, line)) throw IngestionError(0, "results: empty file");
  if (csv::split(line) != result_columns()) throw IngestionError(1, "results: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t row = 1;
  while (csv::read_record(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != result_columns().size()) throw IngestionError(row, "results: wrong field count");
    ResultRow r;
    r.dataset = f[0];
    r.method = f[1];
    r.rho = csv::parse_double(f[2], row);
    r.fold = static_cast<std::size_t>(csv::parse_double(f[3], row));
    r.seed = std::stoull(f[4]);
    r.accuracy = csv::parse_double(f[5], row);
    r.delta_dp = csv::parse_double(f[6], row);
    r.deo = csv::parse_double(f[7], row);
    r.config_hash = f[8];
    rows.push_back(r);
  }
  return rows;
}

struct Stat {
  double mean = kNaN;
  double std = kNaN;  // sample standard deviation; 0 for one value
  std::size_t n = 0;
};

inline Stat summarize_values(const std::vector<double>& v) {
  Stat s;
  std::vector<double> ok;
  for (double x : v)
    if (std::isfinite(x)) ok.push_back(x);
  s.n = ok.size();
  if (ok.empty()) return s;
  double sum = 0.0;
  for (double x : ok) sum += x;
  s.mean = sum / static_cast<double>(ok.size());
  double ss = 0.0;
  for (double x : ok) ss += (x - s.mean) * (x - s.mean);
  s.std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
  return s;
}

struct CellSummary {
  std::string method;
  double rho = 0.0;
  Stat accuracy, delta_dp, deo;
  std::size_t failed = 0;
};

/// One summary per (method, rho), ordered by method then rho.
inline std::vector<CellSummary> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, double>, std::vector<const ResultRow*>> cells;
  for (const auto& r : rows) cells[{r.method, r.rho}].push_back(&r);
  std::vector<CellSummary> out;
  for (const auto& [key, group] : cells) {
    CellSummary s;
    s.method = key.first;
    s.rho = key.second;
    std::vector<double> acc, dp, de;
    for (const auto* r : group) {
      if (!r->ok()) {
        ++s.failed;
        continue;
      }
      acc.push_back(r->accuracy);
      dp.push_back(r->delta_dp);
      de.push_back(r->deo);
    }
    s.accuracy = summarize_values(acc);
    s.delta_dp = summarize_values(dp);
    s.deo = summarize_values(de);
    out.push_back(s);
  }
  return out;
}

inline void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& os) {
  csv::write_row(os, {"method", "rho", "n", "failed", "accuracy_mean", "accuracy_std", "delta_dp_mean", "delta_dp_std",
                      "deo_mean", "deo_std"});
  for (const auto& c : cells)
    csv::write_row(os, {c.method, csv::format_double(c.rho), std::to_string(c.accuracy.n), std::to_string(c.failed),
                        csv::format_double(c.accuracy.mean), csv::format_double(c.accuracy.std),
                        csv::format_double(c.delta_dp.mean), csv::format_double(c.delta_dp.std),
                        csv::format_double(c.deo.mean), csv::format_double(c.deo.std)});
}

// ---- one (rho, fold) cell --------------------------------------------------------

/// Trains every requested method on one corrupted fold and scores it on the
/// clean test split against ideal labels. A failing method yields a row with
/// NaN metrics and the error text; the others are unaffected.
inline std::vector<ResultRow> run_cell(const ExperimentConfig& c, const TabularDataset& data, double rho,
                                       std::size_t fold, const std::vector<Method>& methods, const std::string& hash) {
  std::vector<ResultRow> rows;
  std::optional<Standardized> st;
  std::string prep_error;
  try {
    st = prepare_fold(c, data, fold, rho);
  } catch (const std::exception& e) {
    prep_error = e.what();
  }
  TrainConfig tc = c.train;
  tc.seed = model_seed(c, fold);
  tc.eval_every = 0;
  tc.checkpoint_path.clear();
  LogisticConfig lc = c.logistic;
  lc.seed = mix_seed(tc.seed, 7);
  const Hyperparams hyper = c.hyper_for(rho);

  std::optional<ModelParams> dbrf;  // shared by dbrf_star and dbrf_lr
  std::string dbrf_error;
  auto dbrf_model = [&]() -> const ModelParams& {
    if (!dbrf && dbrf_error.empty()) {
      try {
        dbrf = fit(tc, hyper, without_ideal_labels(st->train), st->test).params;
      } catch (const std::exception& e) {
        dbrf_error = e.what();
      }
    }
    if (!dbrf) throw Error(dbrf_error);
    return *dbrf;
  };

  for (auto m : methods) {
    ResultRow r;
    r.dataset = c.dataset;
    r.method = to_string(m);
    r.rho = rho;
    r.fold = fold;
    r.seed = tc.seed;
    r.config_hash = hash;
    try {
      if (!st) throw Error(prep_error);
      const Matrix x_test = features_by_column(st->test);
      Bits pred;
      switch (m) {
        case Method::dbrf_star: pred = predict_ideal(dbrf_model(), x_test); break;
        case Method::dbrf_lr: {
          const ModelParams& p = dbrf_model();
          const TabularDataset visible = without_ideal_labels(st->train);
          const Matrix z_train = encode_means(p.nets.encoder, features_by_column(visible)).first;
          const auto head = train_downstream(z_train, visible.observed_labels, lc);
          pred = logistic_predict(head, encode_means(p.nets.encoder, x_test).first);
          break;
        }
        case Method::vae_lr: pred = predict(train_vae_lr(tc, lc, st->train), x_test); break;
        case Method::raw_lr: pred = logistic_predict(train_raw_lr(st->train, lc), x_test); break;
      }
      const EvalMetrics em = evaluate_predictions(pred, st->test);
      r.accuracy = em.acc_ideal;
      r.delta_dp = em.dp;
      r.deo = em.deo;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    rows.push_back(r);
  }
  return rows;
}

// ---- sweep ------------------------------------------------------------------------

struct SweepResult {
  std::vector<ResultRow> rows;  // ordered by rho, fold, method
  std::vector<CellSummary> summary;
  double clean_delta_dp = kNaN;
  std::string config_hash;

  bool any_cell_empty() const {
    for (const auto& s : summary)
      if (s.accuracy.n == 0) return true;
    return false;
  }
};

inline SweepResult run_sweep(const ExperimentConfig& c, const TabularDataset& data) {
  c.validate();
  SweepResult out;
  out.config_hash = config_hash(c);
  out.clean_delta_dp = clean_delta_dp(data);
  const std::size_t jobs = c.rho_values.size() * c.folds;
  std::vector<std::vector<ResultRow>> slots(jobs);
  parallel_for(jobs, c.threads, [&](std::size_t i) {
    const double rho = c.rho_values[i / c.folds];
    const std::size_t fold = i % c.folds;
    slots[i] = run_cell(c, data, rho, fold, c.methods, out.config_hash);
  });
  for (auto& s : slots)
    for (auto& r : s) out.rows.push_back(std::move(r));
  out.summary = summarize(out.rows);
  return out;
}

/// Accuracy-vs-rho and delta_dp-vs-rho charts; the second carries the clean
/// delta_dp as a reference line.
inline std::pair<std::string, std::string> sweep_charts(const SweepResult& r, const std::string& dataset) {
  std::map<std::string, svg::Series> acc, dp;
  for (const auto& s : r.summary) {
    if (s.accuracy.n == 0) continue;
    acc[s.method].name = s.method;
    acc[s.method].x.push_back(s.rho);
    acc[s.method].y.push_back(s.accuracy.mean);
    if (!std::isfinite(s.delta_dp.mean)) continue;
    dp[s.method].name = s.method;
    dp[s.method].x.push_back(s.rho);
    dp[s.method].y.push_back(s.delta_dp.mean);
  }
  std::vector<svg::Series> a, d;
  for (auto& [_, s] : acc) a.push_back(s);
  for (auto& [_, s] : dp) d.push_back(s);
  svg::Axes aa{"Accuracy vs label bias (" + dataset + ")", "rho", "accuracy (ideal labels)", std::nullopt, ""};
  svg::Axes da{"Delta DP vs label bias (" + dataset + ")", "rho", "delta DP", r.clean_delta_dp, "clean labels"};
  return {svg::linechart(a, aa), svg::linechart(d, da)};
}

// ---- ablation ----------------------------------------------------------------------

/// A loss-term mask on top of the always-on disentanglement objective.
struct AblationVariant {
  std::string name;
  LossTerms terms;
};

inline std::vector<AblationVariant> standard_ablation_variants() {
  return {{"dbvae+umi+p", {true, true, true}},     {"dbvae", {false, false, false}},
          {"dbvae+p", {false, false, true}},       {"dbvae+umi", {true, true, false}},
          {"dbvae+xi_rm", {true, false, false}},   {"dbvae+beta_b", {false, true, false}},
          {"dbvae+beta_b+p", {false, true, true}}};
}

inline AblationVariant ablation_variant_from_string(const std::string& name) {
  for (const auto& v : standard_ablation_variants())
    if (v.name == name) return v;
  throw ConfigError("unknown ablation variant '" + name + "'");
}

/// r_m when H(y|r_m) is trained, else f(z) when L_p is on, else a downstream
/// logistic classifier on the posterior mean of z.
inline std::string ablation_prediction_source(const LossTerms& t) {
  if (t.umi_rm) return "r_m";
  if (t.supervised) return "f(z)";
  return "lr(z)";
}

struct AblationRow {
  std::string variant;
  std::size_t fold = 0;
  double accuracy = kNaN;
  double delta_dp = kNaN;
  double deo = kNaN;
  std::string error;
};

struct AblationSummary {
  std::string variant;
  Stat accuracy, delta_dp;
};

struct AblationResult {
  double rho = 0.0;
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;  // in variant order
  std::string config_hash;

  const AblationSummary& find(const std::string& variant) const {
    for (const auto& s : summary)
      if (s.variant == variant) return s;
    throw ConfigError("ablation result has no variant '" + variant + "'");
  }
};

inline EvalMetrics evaluate_variant(const ExperimentConfig& c, const Standardized& st, const LossTerms& terms,
                                    const Hyperparams& hyper, std::uint64_t seed) {
  TrainConfig tc = c.train;
  tc.terms = terms;
  tc.seed = seed;
  tc.eval_every = 0;
  tc.checkpoint_path.clear();
  const TabularDataset visible = without_ideal_labels(st.train);
  const ModelParams p = fit(tc, hyper, visible, st.test).params;
  const Matrix x_test = features_by_column(st.test);
  Bits pred;
  if (terms.umi_rm) {
    pred = predict_ideal(p, x_test);
  } else if (terms.supervised) {
    pred = predict_from_z_head(p, x_test);
  } else {
    LogisticConfig lc = c.logistic;
    lc.seed = mix_seed(seed, 7);
    const auto head =
        train_downstream(encode_means(p.nets.encoder, features_by_column(visible)).first, visible.observed_labels, lc);
    pred = logistic_predict(head, encode_means(p.nets.encoder, x_test).first);
  }
  return evaluate_predictions(pred, st.test);
}

inline AblationResult run_ablation(const ExperimentConfig& c, const TabularDataset& data, double rho,
                                   const std::vector<AblationVariant>& variants = standard_ablation_variants()) {
  c.validate();
  require(!variants.empty(), "ablation: no variants");
  AblationResult out;
  out.rho = rho;
  out.config_hash = config_hash(c);
  const Hyperparams hyper = c.hyper_for(rho);
  const std::size_t jobs = variants.size() * c.folds;
  std::vector<AblationRow> slots(jobs);
  std::vector<std::optional<Standardized>> folds(c.folds);
  for (std::size_t f = 0; f < c.folds; ++f) folds[f] = prepare_fold(c, data, f, rho);
  parallel_for(jobs, c.threads, [&](std::size_t i) {
    const auto& v = variants[i / c.folds];
    const std::size_t fold = i % c.folds;
    AblationRow r;
    r.variant = v.name;
    r.fold = fold;
    try {
      const EvalMetrics m = evaluate_variant(c, *folds[fold], v.terms, hyper, model_seed(c, fold));
      r.accuracy = m.acc_ideal;
      r.delta_dp = m.dp;
      r.deo = m.deo;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    slots[i] = r;
  });
  out.rows = std::move(slots);
  for (const auto& v : variants) {
    std::vector<double> acc, dp;
    for (const auto& r : out.rows)
      if (r.variant == v.name && r.error.empty()) {
        acc.push_back(r.accuracy);
        dp.push_back(r.delta_dp);
      }
    out.summary.push_back({v.name, summarize_values(acc), summarize_values(dp)});
  }
  return out;
}

inline void write_ablation_csv(const AblationResult& r, std::ostream& os) {
  csv::write_row(os, {"variant", "prediction", "rho", "n", "accuracy_mean", "accuracy_std", "delta_dp_mean",
                      "delta_dp_std", "config_hash"});
  for (const auto& s : r.summary) {
    const auto source = ablation_prediction_source(ablation_variant_from_string(s.variant).terms);
    csv::write_row(os, {s.variant, source, csv::format_double(r.rho), std::to_string(s.accuracy.n),
                        csv::format_double(s.accuracy.mean), csv::format_double(s.accuracy.std),
                        csv::format_double(s.delta_dp.mean), csv::format_double(s.delta_dp.std), r.config_hash});
  }
}

// ---- hyperparameter grid -------------------------------------------------------------

struct GridRow {
  std::string axis;  // beta_xi | alpha | lambda
  Hyperparams hyper;
  std::size_t fold = 0;
  double accuracy = kNaN;
  double delta_dp = kNaN;
  std::string error;
};

struct GridSpec {
  std::vector<double> beta_values{0.1, 0.5, 1.0};
  std::vector<double> xi_values{0.1, 0.5, 1.0};
  std::vector<double> alpha_values{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> lambda_values{0.0, 0.1, 0.5};
  // Fixed values for the alpha and lambda lines.
  double line_beta = 0.5;
  double line_xi = 0.1;
  double line_lambda = 0.1;
  double line_alpha = 1.0;
};

/// beta x xi grid (alpha, lambda from the config), then an alpha line and
/// a lambda line at the fixed values of `spec`.
inline std::vector<GridRow> run_hyper_grid(const ExperimentConfig& c, const TabularDataset& data, double rho,
                                           const GridSpec& spec) {
  c.validate();
  std::vector<std::pair<std::string, Hyperparams>> points;
  for (double b : spec.beta_values)
    for (double x : spec.xi_values) {
      Hyperparams h = c.hyper;
      h.beta = b;
      h.xi = x;
      points.emplace_back("beta_xi", h);
    }
  for (double a : spec.alpha_values) {
    Hyperparams h = c.hyper;
    h.alpha = a;
    h.beta = spec.line_beta;
    h.xi = spec.line_xi;
    h.lambda = spec.line_lambda;
    points.emplace_back("alpha", h);
  }
  for (double l : spec.lambda_values) {
    Hyperparams h = c.hyper;
    h.alpha = spec.line_alpha;
    h.beta = spec.line_beta;
    h.xi = spec.line_xi;
    h.lambda = l;
    points.emplace_back("lambda", h);
  }
  for (const auto& [_, h] : points) h.validate();
  std::vector<std::optional<Standardized>> folds(c.folds);
  for (std::size_t f = 0; f < c.folds; ++f) folds[f] = prepare_fold(c, data, f, rho);
  std::vector<GridRow> rows(points.size() * c.folds);
  parallel_for(rows.size(), c.threads, [&](std::size_t i) {
    const auto& [axis, h] = points[i / c.folds];
    const std::size_t fold = i % c.folds;
    GridRow r;
    r.axis = axis;
    r.hyper = h;
    r.fold = fold;
    try {
      const EvalMetrics m = evaluate_variant(c, *folds[fold], c.train.terms, h, model_seed(c, fold));
      r.accuracy = m.acc_ideal;
      r.delta_dp = m.dp;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    rows[i] = r;
  });
  return rows;
}

inline void write_grid_csv(const std::vector<GridRow>& rows, std::ostream& os, const std::string& hash) {
  csv::write_row(os, {"axis", "alpha", "lambda", "beta", "xi", "fold", "accuracy", "delta_dp", "config_hash"});
  for (const auto& r : rows)
    csv::write_row(os, {r.axis, csv::format_double(r.hyper.alpha), csv::format_double(r.hyper.lambda),
                        csv::format_double(r.hyper.beta), csv::format_double(r.hyper.xi), std::to_string(r.fold),
                        csv::format_double(r.accuracy), csv::format_double(r.delta_dp), hash});
}

/// Mean accuracy and delta_dp per grid point on one axis, ordered by the
/// value of `key`.
inline std::vector<std::tuple<double, double, double>> grid_line(const std::vector<GridRow>& rows,
                                                                 const std::string& axis,
                                                                 const std::function<double(const Hyperparams&)>& key) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by;
  for (const auto& r : rows)
    if (r.axis == axis && r.error.empty()) {
      by[key(r.hyper)].first.push_back(r.accuracy);
      by[key(r.hyper)].second.push_back(r.delta_dp);
    }
  std::vector<std::tuple<double, double, double>> out;
  for (const auto& [k, v] : by) out.emplace_back(k, summarize_values(v.first).mean, summarize_values(v.second).mean);
  return out;
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

// ---- representation projection ----------------------------------------------------------

struct Projection {
  Matrix coordinates;  // rows x 2
  Bits group;
  std::vector<std::size_t> rows;
  double separation = kNaN;
  double bandwidth = 0.0;
};

inline Projection project_matrix(const Matrix& points_by_row, const Bits& group, const KernelPcaOptions& opt) {
  const KernelPcaResult k = kernel_pca(points_by_row, opt);
  Projection p;
  p.coordinates = k.coordinates;
  p.rows = k.rows;
  p.bandwidth = k.bandwidth;
  for (auto r : k.rows) p.group.push_back(group[r]);
  p.separation = group_separation_score(p.coordinates, p.group);
  return p;
}

/// Kernel-PCA projection of the posterior means of z.
inline Projection project_representations(const ModelParams& params, const TabularDataset& data,
                                          const KernelPcaOptions& opt = {}) {
  const Matrix mu_z = encode_means(params.nets.encoder, features_by_column(data)).first;
  return project_matrix(mu_z.transpose(), group_bits(data), opt);
}

inline Projection project_inputs(const TabularDataset& data, const KernelPcaOptions& opt = {}) {
  return project_matrix(data.features, group_bits(data), opt);
}

inline void write_projection_csv(const Projection& p, std::ostream& os) {
  csv::write_row(os, {"row", "group", "pc1", "pc2"});
  for (Index i = 0; i < p.coordinates.rows(); ++i)
    csv::write_row(os, {std::to_string(p.rows[static_cast<std::size_t>(i)]),
                        std::to_string(p.group[static_cast<std::size_t>(i)]), csv::format_double(p.coordinates(i, 0)),
                        csv::format_double(p.coordinates.cols() > 1 ? p.coordinates(i, 1) : 0.0)});
}

}  // namespace dbrf
