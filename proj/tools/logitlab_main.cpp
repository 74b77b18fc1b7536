// Command-line front end: simulate one cell, sweep a grid, fit an external
// CSV, slice a saved model into interpretation curves, or print its
// capacity bounds.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <logitlab/logitlab.hpp>

namespace fs = std::filesystem;
using namespace logitlab;

namespace {

struct TrainFlags {
  std::optional<double> lr, l1, l2;
  std::optional<int> batch, epochs, patience;
  std::optional<long> max_steps;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--batch", batch, "mini-batch size");
    cmd->add_option("--epochs", epochs, "maximum training epochs");
    cmd->add_option("--max-steps", max_steps, "cap on total optimizer steps (0 = off)");
    cmd->add_option("--l1", l1, "l1 penalty");
    cmd->add_option("--l2", l2, "l2 penalty");
    cmd->add_option("--patience", patience, "early-stopping patience in epochs");
  }

  void apply(TrainConfig& cfg) const {
    if (lr) cfg.learning_rate = *lr;
    if (batch) cfg.batch_size = *batch;
    if (epochs) cfg.max_epochs = *epochs;
    if (max_steps) cfg.max_steps = *max_steps;
    if (l1) cfg.l1 = *l1;
    if (l2) cfg.l2 = *l2;
    if (patience) cfg.early_stop_patience = *patience;
  }
};

SweepConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(parse_kv_config(ss.str()));
}

std::vector<double> make_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) {
    g[i] = lo + (hi - lo) * i / static_cast<double>(points - 1);
  }
  return g;
}

int cmd_simulate(const std::string& scenario, int d, long n, const std::string& model,
                 std::uint64_t seed, const std::string& out_dir, double weight_scale,
                 long eval_mc, const TrainFlags& flags) {
  SweepConfig cfg;
  cfg.scenarios = {scenario_from_string(scenario)};
  cfg.dims = {d};
  cfg.sample_sizes = {n};
  cfg.seeds = {seed};
  cfg.models = {parse_model_desc(model)};
  cfg.weight_scale = weight_scale;
  cfg.metrics.eval_mc_size = eval_mc;
  cfg.full = true;  // a single explicit cell is never gated
  flags.apply(cfg.train);
  cfg.validate();

  const CellResult cell = run_cell(cfg, cfg.scenarios[0], cfg.models[0], d, n, seed);
  const std::string hash = sweep_config_hash(cfg);

  fs::create_directories(fs::path(out_dir) / "curves");
  fs::create_directories(fs::path(out_dir) / "models");
  write_results_csv({cell}, hash, (fs::path(out_dir) / "results.csv").string());
  write_curve_csv(cell.curve,
                  (fs::path(out_dir) / "curves" / (cell.key.str() + ".csv")).string());
  save_params(cell.params,
              (fs::path(out_dir) / "models" / (cell.key.str() + ".bin")).string());
  write_history_csv(cell.history,
                    (fs::path(out_dir) / (cell.key.str() + "_history.csv")).string());
  std::ofstream manifest(fs::path(out_dir) / "run_manifest.txt", std::ios::binary);
  manifest << "config_hash = " << hash << "\n\n" << sweep_config_text(cfg);

  std::printf("%s: eval prediction loss %.6f (bayes %.6f), interpretation loss %.3e\n",
              cell.key.str().c_str(), cell.eval_pred_loss,
              cell.bayes.min_prediction_loss, cell.interp.value);
  std::printf("results written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, bool full,
              bool save_models, int threads) {
  SweepConfig cfg = config_path.empty() ? SweepConfig{} : load_config_file(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (full) cfg.full = true;
  if (save_models) cfg.save_models = true;
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  const SweepOutput out = run_sweep_to_dir(cfg);
  int failures = 0;
  for (const auto& c : out.cells) failures += c.status != "ok";
  std::printf("sweep %s: %zu cells, %d failed, results in %s\n", out.config_hash.c_str(),
              out.cells.size(), failures, cfg.out_dir.c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_fit(const std::string& data_path, const std::string& label,
            const std::vector<std::string>& features,
            const std::vector<std::string>& categorical, double test_fraction,
            const std::string& model, std::uint64_t seed, const std::string& out_dir,
            double gamma, const TrainFlags& flags) {
  TabularSchema schema;
  schema.label = label;
  schema.features = features;
  schema.categorical = categorical;
  schema.test_fraction = test_fraction;
  const TabularSplit split = load_tabular(data_path, schema, seed);

  const ModelDesc desc = parse_model_desc(model);
  TrainConfig tc;
  tc.seed = seed;
  flags.apply(tc);
  const MlpArch arch{static_cast<int>(split.train.X.cols()), desc.hidden};
  const TrainResult fit =
      train_erm(arch, split.train, tc, split.test.n() > 0 ? &split.test : nullptr);

  fs::create_directories(out_dir);
  save_params(fit.params, (fs::path(out_dir) / "model.bin").string());
  write_history_csv(fit.history, (fs::path(out_dir) / "history.csv").string());
  {
    std::ofstream cols(fs::path(out_dir) / "columns.txt", std::ios::binary);
    for (const auto& c : split.columns) cols << c << "\n";
  }

  std::printf("train: %zu rows, %zu columns after expansion\n", split.train.n(),
              split.train.X.cols());
  std::printf("final train loss %.6f\n", fit.history.train_loss.back());
  if (split.test.n() > 0) {
    std::printf("test prediction loss %.6f\n", prediction_loss(fit.params, split.test));
    std::printf("test log loss       %.6f\n",
                log_loss(forward(fit.params, split.test.X).probs, split.test.y));
    std::printf("test mse            %.6f\n", mse_loss(fit.params, split.test));
    std::printf("test margin loss    %.6f (gamma=%g)\n",
                margin_loss(fit.params, split.test, gamma), gamma);
    std::printf("market share        %.6f\n", market_share(fit.params, split.test));
  }
  std::printf("model written to %s\n", (fs::path(out_dir) / "model.bin").string().c_str());
  return 0;
}

int cmd_interpret(const std::string& model_path, int j, double grid_min, double grid_max,
                  int points, const std::vector<double>& baseline_in,
                  const std::string& out_path, const std::vector<double>& at,
                  int elasticity_j, int derivative_j, const std::vector<int>& vtts_pair,
                  bool utility) {
  const MlpParams model = load_params(model_path);
  const int dim = model.input_dim();
  std::vector<double> baseline = baseline_in;
  if (baseline.empty()) baseline.assign(dim, 0.0);

  if (!out_path.empty()) {
    const ProbCurve curve =
        prob_curve(model, j, make_grid(grid_min, grid_max, points), baseline);
    write_curve_csv(curve, out_path);
    std::printf("curve for input %d written to %s\n", j, out_path.c_str());
  }
  if (!at.empty()) {
    if (static_cast<int>(at.size()) != dim) {
      throw std::invalid_argument("--at needs exactly " + std::to_string(dim) +
                                  " coordinates");
    }
    std::printf("probability    %.9g\n", predict_prob(model, at));
    if (derivative_j >= 0) {
      std::printf("derivative[%d]  %.9g\n", derivative_j,
                  derivative(model, at, derivative_j));
    }
    if (elasticity_j >= 0) {
      std::printf("elasticity[%d]  %.9g\n", elasticity_j,
                  elasticity(model, at, elasticity_j));
    }
    if (vtts_pair.size() == 2) {
      std::printf("vtts[%d/%d]      %.9g\n", vtts_pair[0], vtts_pair[1],
                  vtts(model, at, vtts_pair[0], vtts_pair[1]));
    }
    if (utility) {
      std::printf("utility diff   %.9g\n", utility_difference(model, at));
    }
  }
  return 0;
}

int cmd_bounds(const std::string& model_path, double n, double gamma,
               const std::string& scenario, int d, std::uint64_t seed, long sample_n,
               bool emp_rad) {
  const MlpParams model = load_params(model_path);
  double margin_value = 0.0;
  std::optional<McValue> emp;
  if (!scenario.empty()) {
    const Scenario sc = scenario_from_string(scenario);
    const DgpSpec spec = make_spec(sc, d, default_weight_scale(sc, d), seed);
    if (spec.observed_dim() != model.input_dim()) {
      throw std::invalid_argument("model input dim does not match scenario");
    }
    Rng rng(seed, 0x626e64ULL);
    const Dataset ds = sample_dataset(spec, static_cast<std::size_t>(sample_n), rng);
    margin_value = margin_loss(model, ds, gamma);
    if (emp_rad) {
      EmpRadConfig cfg;
      Rng err = rng.split(5);
      emp = empirical_rademacher(model.arch(), ds.X, layer_norms(model), cfg, err);
    }
  }
  const BoundReport r = build_bound_report(model, n, gamma, margin_value, emp);
  std::printf("param_count          %zu\n", model.param_count());
  std::printf("depth                %d\n", model.depth());
  std::printf("vc_dim               %.9g\n", r.vc_dim);
  std::printf("vc_rad_bound         %.9g\n", r.vc_rad);
  std::printf("norm_oneinf_bound    %.9g\n", r.norm_oneinf);
  std::printf("norm_frobenius_bound %.9g\n", r.norm_frobenius);
  std::printf("margin_loss          %.9g (gamma=%g)\n", margin_value, gamma);
  std::printf("prediction_upper     %.9g\n", r.prediction_upper_value);
  std::printf("interpretation_upper %.9g\n", r.interpretation_upper_value);
  if (r.empirical_rad) {
    std::printf("empirical_rad        %.9g (se %.3g)%s\n", r.empirical_rad->value,
                r.empirical_rad->se,
                r.empirical_rad_warning ? "  [exceeds a norm bound]" : "");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical-learning lab for binary choice models"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "train and evaluate one synthetic cell");
  std::string sim_scenario = "S1", sim_model = "dnn", sim_out = "results";
  int sim_d = 20;
  long sim_n = 1000, sim_eval = 100000;
  std::uint64_t sim_seed = 1;
  double sim_scale = 0.0;
  TrainFlags sim_flags;
  sim->add_option("--scenario", sim_scenario, "S1, S2 or S3");
  sim->add_option("--d", sim_d, "input dimension");
  sim->add_option("--n", sim_n, "training sample size");
  sim->add_option("--model", sim_model, "bnl, dnn or mlp:AxB...");
  sim->add_option("--seed", sim_seed, "cell seed");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--weight-scale", sim_scale, "true-weight scale (0 = scenario default)");
  sim->add_option("--eval-mc", sim_eval, "evaluation Monte-Carlo size");
  sim_flags.attach(sim);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a full scenario/model/d/N/seed grid");
  std::string sweep_config, sweep_out;
  bool sweep_full = false, sweep_save_models = false;
  int sweep_threads = 0;
  sweep->add_option("--config", sweep_config, "config file (key = value sections)");
  sweep->add_option("--out", sweep_out, "output directory (overrides config)");
  sweep->add_flag("--full", sweep_full, "unlock N > 10^5 for non-linear models");
  sweep->add_flag("--save-models", sweep_save_models, "persist every trained model");
  sweep->add_option("--threads", sweep_threads, "worker threads (0 = hardware)");

  // fit
  auto* fit = app.add_subcommand("fit", "train on an external binary-choice CSV");
  std::string fit_data, fit_label, fit_model = "bnl", fit_out = "fit_out";
  std::vector<std::string> fit_features, fit_categorical;
  double fit_test_fraction = 0.10, fit_gamma = 1.0;
  std::uint64_t fit_seed = 1;
  TrainFlags fit_flags;
  fit->add_option("--data", fit_data, "CSV file")->required();
  fit->add_option("--label", fit_label, "0/1 label column")->required();
  fit->add_option("--features", fit_features, "feature columns")
      ->required()
      ->delimiter(',');
  fit->add_option("--categorical", fit_categorical, "categorical columns")
      ->delimiter(',');
  fit->add_option("--test-fraction", fit_test_fraction, "holdout fraction");
  fit->add_option("--model", fit_model, "bnl, dnn or mlp:AxB...");
  fit->add_option("--seed", fit_seed, "split/training seed");
  fit->add_option("--gamma", fit_gamma, "margin parameter for reporting");
  fit->add_option("--out", fit_out, "output directory");
  fit_flags.attach(fit);

  // interpret
  auto* interp = app.add_subcommand("interpret", "curves and local effects of a model");
  std::string interp_model, interp_out;
  int interp_j = 0, interp_points = 41;
  double interp_min = -3.0, interp_max = 3.0;
  std::vector<double> interp_baseline, interp_at;
  int interp_elasticity = -1, interp_derivative = -1;
  std::vector<int> interp_vtts;
  bool interp_utility = false;
  interp->add_option("--model", interp_model, "saved model file")->required();
  interp->add_option("--j", interp_j, "input index to sweep");
  interp->add_option("--grid-min", interp_min, "sweep lower edge");
  interp->add_option("--grid-max", interp_max, "sweep upper edge");
  interp->add_option("--points", interp_points, "grid size");
  interp->add_option("--baseline", interp_baseline, "fixed values for other inputs")
      ->delimiter(',');
  interp->add_option("--out", interp_out, "curve CSV path");
  interp->add_option("--at", interp_at, "point for local diagnostics")->delimiter(',');
  interp->add_option("--derivative", interp_derivative, "derivative index at --at");
  interp->add_option("--elasticity", interp_elasticity, "elasticity index at --at");
  interp->add_option("--vtts", interp_vtts, "time,cost indices at --at")->delimiter(',');
  interp->add_flag("--utility", interp_utility, "print utility difference at --at");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "capacity bounds for a saved model");
  std::string bounds_model, bounds_scenario;
  double bounds_n = 100000.0, bounds_gamma = 1.0;
  int bounds_d = 20;
  std::uint64_t bounds_seed = 1;
  long bounds_sample = 10000;
  bool bounds_emp = false;
  bounds->add_option("--model", bounds_model, "saved model file")->required();
  bounds->add_option("--n", bounds_n, "sample size the bounds refer to");
  bounds->add_option("--gamma", bounds_gamma, "margin parameter");
  bounds->add_option("--scenario", bounds_scenario,
                     "synthetic scenario for the empirical margin term");
  bounds->add_option("--d", bounds_d, "scenario input dimension");
  bounds->add_option("--seed", bounds_seed, "scenario seed");
  bounds->add_option("--sample-n", bounds_sample, "rows drawn for the margin term");
  bounds->add_flag("--emp-rad", bounds_emp, "also run the empirical estimator");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_scenario, sim_d, sim_n, sim_model, sim_seed, sim_out,
                          sim_scale, sim_eval, sim_flags);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_config, sweep_out, sweep_full, sweep_save_models,
                       sweep_threads);
    }
    if (fit->parsed()) {
      return cmd_fit(fit_data, fit_label, fit_features, fit_categorical,
                     fit_test_fraction, fit_model, fit_seed, fit_out, fit_gamma,
                     fit_flags);
    }
    if (interp->parsed()) {
      return cmd_interpret(interp_model, interp_j, interp_min, interp_max, interp_points,
                           interp_baseline, interp_out, interp_at, interp_elasticity,
                           interp_derivative, interp_vtts, interp_utility);
    }
    if (bounds->parsed()) {
      return cmd_bounds(bounds_model, bounds_n, bounds_gamma, bounds_scenario, bounds_d,
                        bounds_seed, bounds_sample, bounds_emp);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
