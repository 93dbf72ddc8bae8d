// Command-line driver: dataset preparation, single runs, sweeps, ablations,
// hyperparameter grids, projections and metric reports.

#include "dbrf/dbrf.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dbrf;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string dataset;
  std::string grouping;
  std::vector<double> rho;
  std::vector<std::string> methods;
  std::size_t folds = 0;
  std::int64_t seed = -1;
  std::string out_dir = "out";
  std::size_t threads = 0;
  std::size_t epochs = 0;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--dataset", o.dataset, "synthetic | adult | compas");
  app->add_option("--grouping", o.grouping, "Sensitive grouping from the dataset schema");
  app->add_option("--rho", o.rho, "Label-bias flip rate(s)")->delimiter(',');
  app->add_option("--method", o.methods, "dbrf_star, dbrf_lr, vae_lr, raw_lr")->delimiter(',');
  app->add_option("--folds", o.folds, "Number of random splits");
  app->add_option("--seed", o.seed, "Base seed");
  app->add_option("--out-dir", o.out_dir, "Output directory");
  app->add_option("--threads", o.threads, "Concurrent workers");
  app->add_option("--epochs", o.epochs, "Training epochs");
}

ExperimentConfig build_config(const CommonOptions& o) {
  nlohmann::json j = o.config_path.empty() ? nlohmann::json::object() : read_json_file(o.config_path);
  const std::string dataset = !o.dataset.empty() ? o.dataset : j.value("dataset", std::string("synthetic"));
  ExperimentConfig c = experiment_config_from_json(j, default_config(dataset));
  c.dataset = dataset;
  if (!o.grouping.empty()) c.grouping = o.grouping;
  if (!o.rho.empty()) c.rho_values = o.rho;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(method_from_string(m));
  }
  if (o.folds) c.folds = o.folds;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (o.threads) c.threads = o.threads;
  if (o.epochs) c.train.epochs = o.epochs;
  if (const char* s = std::getenv("DBRF_SCHEMA_DIR"); s && *s && c.schema_dir == "schemas") c.schema_dir = s;
  c.validate();
  return c;
}

fs::path ensure_dir(const std::string& dir) {
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << text;
}

template <class F>
void write_with(const fs::path& path, F&& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  f(os);
}

void print_dataset_summary(const TabularDataset& d, std::ostream& os) {
  const Bits g = group_bits(d);
  std::size_t prot = 0;
  for (auto b : g) prot += b;
  os << "rows " << d.rows() << "  features " << d.cols() << "  protected " << prot << "  privileged "
     << d.rows() - prot << '\n';
  const Bits& y = evaluation_labels(d);
  write_report_text(group_report({y, y, g}), os);
}

int cmd_synth(const CommonOptions& o, std::size_t n, double phi) {
  SyntheticSpec s;
  if (n) s.n = n;
  if (std::isfinite(phi)) s.rotation_phi = phi;
  s.seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : 7;
  const TabularDataset d = generate_synthetic(s);
  const auto dir = ensure_dir(o.out_dir);
  write_dataset_csv(d, (dir / "synthetic.csv").string());
  print_dataset_summary(d, std::cout);
  std::cout << "wrote " << (dir / "synthetic.csv").string() << '\n';
  return 0;
}

int cmd_prepare(const CommonOptions& o) {
  const ExperimentConfig c = build_config(o);
  const TabularDataset d = load_experiment_dataset(c);
  const auto dir = ensure_dir(o.out_dir);
  const auto path = dir / (c.dataset + (c.grouping.empty() ? "" : "_" + c.grouping) + ".csv");
  write_dataset_csv(d, path.string());
  print_dataset_summary(d, std::cout);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_train(const CommonOptions& o, std::size_t fold, const std::string& resume) {
  const ExperimentConfig c = build_config(o);
  const double rho = c.rho_values.front();
  const TabularDataset data = load_experiment_dataset(c);
  const Standardized st = prepare_fold(c, data, fold, rho);
  const auto dir = ensure_dir(o.out_dir);
  TrainConfig tc = c.train;
  tc.seed = model_seed(c, fold);
  tc.checkpoint_path = (dir / "checkpoint.json").string();
  if (tc.eval_every == 0) tc.eval_every = 10;
  const Hyperparams hyper = c.hyper_for(rho);
  TrainerState s = resume.empty() ? make_trainer_state(arch_for(st.train, tc), tc) : load_checkpoint(resume);
  fit(s, tc, hyper, without_ideal_labels(st.train), st.test, to_json(c));
  write_with(dir / "history.csv", [&](std::ostream& os) { write_history_csv(s.history, os); });
  write_json_file(model_manifest(s.params, hyper), (dir / "manifest.json").string());
  const EvalMetrics m = evaluate(s.params, st.test, PredictionSource::rm);
  std::cout << "dataset " << c.dataset << "  rho " << rho << "  fold " << fold << "  epochs " << s.epochs_done << '\n'
            << "accuracy(ideal) " << m.acc_ideal << "  delta_dp " << m.dp << "  deo " << m.deo << '\n'
            << "wrote " << tc.checkpoint_path << '\n';
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  const ExperimentConfig c = build_config(o);
  const TabularDataset data = load_experiment_dataset(c);
  const SweepResult r = run_sweep(c, data);
  const auto dir = ensure_dir(o.out_dir);
  write_with(dir / "results.csv", [&](std::ostream& os) { write_results_csv(r.rows, os); });
  write_with(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(r.summary, os); });
  write_json_file(to_json(c), (dir / "config.json").string());
  try {
    const auto [acc, dp] = sweep_charts(r, c.dataset);
    write_text(dir / "accuracy.svg", acc);
    write_text(dir / "delta_dp.svg", dp);
  } catch (const ConfigError& e) {
    std::cerr << "charts skipped: " << e.what() << '\n';
  }
  for (const auto& row : r.rows)
    if (!row.error.empty())
      std::cerr << "failed: " << row.method << " rho=" << row.rho << " fold=" << row.fold << ": " << row.error << '\n';
  write_summary_csv(r.summary, std::cout);
  std::cout << "clean delta_dp " << r.clean_delta_dp << "  config " << r.config_hash << '\n';
  if (r.any_cell_empty()) {
    std::cerr << "error: at least one (method, rho) cell has no successful fold\n";
    return 2;
  }
  return 0;
}

int cmd_ablate(const CommonOptions& o, const std::vector<std::string>& variant_names) {
  const ExperimentConfig c = build_config(o);
  const double rho = c.rho_values.front();
  std::vector<AblationVariant> variants;
  for (const auto& v : variant_names) variants.push_back(ablation_variant_from_string(v));
  if (variants.empty()) variants = standard_ablation_variants();
  const TabularDataset data = load_experiment_dataset(c);
  const AblationResult r = run_ablation(c, data, rho, variants);
  const auto dir = ensure_dir(o.out_dir);
  write_with(dir / "ablation.csv", [&](std::ostream& os) { write_ablation_csv(r, os); });
  write_ablation_csv(r, std::cout);
  for (const auto& s : r.summary)
    if (s.accuracy.n == 0) return 2;
  return 0;
}

int cmd_grid(const CommonOptions& o, const GridSpec& spec) {
  const ExperimentConfig c = build_config(o);
  const double rho = c.rho_values.front();
  const TabularDataset data = load_experiment_dataset(c);
  const auto rows = run_hyper_grid(c, data, rho, spec);
  const auto dir = ensure_dir(o.out_dir);
  const std::string hash = config_hash(c);
  write_with(dir / "grid.csv", [&](std::ostream& os) { write_grid_csv(rows, os, hash); });
  std::vector<svg::Series> acc, dp;
  for (const auto& [axis, key] : std::vector<std::pair<std::string, std::function<double(const Hyperparams&)>>>{
           {"alpha", [](const Hyperparams& h) { return h.alpha; }},
           {"lambda", [](const Hyperparams& h) { return h.lambda; }}}) {
    svg::Series a{axis, {}, {}}, d{axis, {}, {}};
    for (const auto& [k, ma, md] : grid_line(rows, axis, key)) {
      if (!std::isfinite(ma) || !std::isfinite(md)) continue;
      a.x.push_back(k);
      a.y.push_back(ma);
      d.x.push_back(k);
      d.y.push_back(md);
    }
    if (!a.x.empty()) {
      write_text(dir / (axis + "_accuracy.svg"),
                 svg::linechart({a}, {"Accuracy vs " + axis, axis, "accuracy (ideal labels)", std::nullopt, ""}));
      write_text(dir / (axis + "_delta_dp.svg"),
                 svg::linechart({d}, {"Delta DP vs " + axis, axis, "delta DP", std::nullopt, ""}));
    }
  }
  write_grid_csv(rows, std::cout, hash);
  for (const auto& r : rows)
    if (!r.error.empty()) return 2;
  return 0;
}

int cmd_project(const CommonOptions& o, const std::string& checkpoint, double bandwidth, std::size_t max_rows,
                std::size_t fold, bool inputs) {
  const ExperimentConfig c = build_config(o);
  const double rho = c.rho_values.front();
  const TabularDataset data = load_experiment_dataset(c);
  const Standardized st = prepare_fold(c, data, fold, rho);
  KernelPcaOptions opt;
  opt.bandwidth = bandwidth;
  opt.max_rows = max_rows;
  opt.seed = c.seed;
  const auto dir = ensure_dir(o.out_dir);
  auto emit = [&](const Projection& p, const std::string& stem, const std::string& title) {
    write_with(dir / (stem + ".csv"), [&](std::ostream& os) { write_projection_csv(p, os); });
    write_text(dir / (stem + ".svg"), svg::scatter(p.coordinates, p.group, {title, "pc1", "pc2", std::nullopt, ""}));
    std::cout << stem << ": rows " << p.coordinates.rows() << "  bandwidth " << p.bandwidth << "  separation "
              << p.separation << '\n';
  };
  if (inputs) emit(project_inputs(st.test, opt), "projection_x", "Kernel PCA of x");
  if (!checkpoint.empty()) {
    const ModelParams params = load_checkpoint(checkpoint).params;
    emit(project_representations(params, st.test, opt), "projection_z", "Kernel PCA of z");
  }
  return 0;
}

int cmd_metrics(const CommonOptions& o, const std::string& predictions) {
  if (!predictions.empty()) {
    std::ifstream is(predictions);
    if (!is) throw Error("cannot open '" + predictions + "'");
    std::string line;
    if (!csv::read_record(is, line)) throw IngestionError(0, "empty predictions file");
    const auto head = csv::split(line);
    auto col = [&](const std::string& n) {
      auto it = std::find(head.begin(), head.end(), n);
      if (it == head.end()) throw IngestionError(1, "predictions file needs a '" + n + "' column");
      return static_cast<std::size_t>(it - head.begin());
    };
    const auto cp = col("prediction"), cl = col("label"), cg = col("group");
    GroupedPredictions gp;
    std::size_t row = 1;
    while (csv::read_record(is, line)) {
      ++row;
      if (line.empty()) continue;
      const auto f = csv::split(line);
      if (f.size() != head.size()) throw IngestionError(row, "wrong field count");
      auto bit = [&](const std::string& s) -> std::uint8_t {
        if (s == "0") return 0;
        if (s == "1") return 1;
        throw IngestionError(row, "expected 0 or 1, found '" + s + "'");
      };
      gp.predictions.push_back(bit(f[cp]));
      gp.labels.push_back(bit(f[cl]));
      gp.group.push_back(bit(f[cg]));
    }
    const GroupReport r = group_report(gp);
    write_report_text(r, std::cout);
    std::cout << "accuracy " << accuracy(gp.predictions, gp.labels) << '\n';
    const auto dir = ensure_dir(o.out_dir);
    write_with(dir / "report.csv", [&](std::ostream& os) { write_report_csv(r, os); });
    return 0;
  }
  const ExperimentConfig c = build_config(o);
  const TabularDataset d = load_experiment_dataset(c);
  std::cout << "dataset " << c.dataset << "  clean delta_dp " << clean_delta_dp(d) << '\n';
  print_dataset_summary(d, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair representation learning under label bias: experiments"};
  app.require_subcommand(1);
  CommonOptions o;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset as CSV");
  add_common(synth, o);
  std::size_t synth_n = 0;
  double synth_phi = std::numeric_limits<double>::quiet_NaN();
  synth->add_option("--n", synth_n, "Number of rows");
  synth->add_option("--phi", synth_phi, "Rotation angle (radians) for the sensitive attribute");

  auto* prepare = app.add_subcommand("prepare", "Ingest Adult/Compas into the normalized CSV form");
  add_common(prepare, o);

  auto* train = app.add_subcommand("train", "Train DBRF on one corrupted fold");
  add_common(train, o);
  std::size_t fold = 0;
  std::string resume;
  train->add_option("--fold", fold, "Fold index");
  train->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Accuracy / delta_dp versus rho for several methods");
  add_common(sweep, o);

  auto* ablate = app.add_subcommand("ablate", "Loss-term ablation");
  add_common(ablate, o);
  std::vector<std::string> variants;
  ablate->add_option("--variant", variants, "Subset of variants (default: all)")->delimiter(',');

  auto* grid = app.add_subcommand("grid", "Hyperparameter grid (beta x xi, alpha line, lambda line)");
  add_common(grid, o);
  GridSpec spec;
  grid->add_option("--beta", spec.beta_values, "Comma-separated beta values of the beta x xi grid")->delimiter(',');
  grid->add_option("--xi", spec.xi_values, "Comma-separated xi values of the beta x xi grid")->delimiter(',');
  grid->add_option("--alpha", spec.alpha_values, "Comma-separated alpha values of the alpha line")->delimiter(',');
  grid->add_option("--lambda", spec.lambda_values, "Comma-separated lambda values of the lambda line")->delimiter(',');

  auto* project = app.add_subcommand("project", "Kernel-PCA projection of x and z");
  add_common(project, o);
  std::string checkpoint;
  double bandwidth = 0.0;
  std::size_t max_rows = 2000;
  bool inputs = false;
  project->add_option("--checkpoint", checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
  project->add_option("--bandwidth", bandwidth, "RBF bandwidth (default: median heuristic)");
  project->add_option("--max-rows", max_rows, "Subsample size");
  project->add_option("--fold", fold, "Fold whose test split is projected");
  project->add_flag("--inputs", inputs, "Also project the raw inputs");

  auto* metrics = app.add_subcommand("metrics", "Fairness report for predictions, or clean-label delta_dp");
  add_common(metrics, o);
  std::string predictions;
  metrics->add_option("--predictions", predictions, "CSV with prediction,label,group columns");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return cmd_synth(o, synth_n, synth_phi);
    if (*prepare) return cmd_prepare(o);
    if (*train) return cmd_train(o, fold, resume);
    if (*sweep) return cmd_sweep(o);
    if (*ablate) return cmd_ablate(o, variants);
    if (*grid) return cmd_grid(o, spec);
    if (*project) {
      if (checkpoint.empty() && !inputs) throw ConfigError("project needs --checkpoint and/or --inputs");
      return cmd_project(o, checkpoint, bandwidth, max_rows, fold, inputs);
    }
    if (*metrics) return cmd_metrics(o, predictions);
  } catch (const IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error in '" << e.term << "': " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
