#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "logitlab/bounds.hpp"
#include "logitlab/config.hpp"
#include "logitlab/csv.hpp"
#include "logitlab/dgp.hpp"
#include "logitlab/interpret.hpp"
#include "logitlab/metrics.hpp"
#include "logitlab/model.hpp"
#include "logitlab/train.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace logitlab {

/// A named hypothesis class in a sweep. "bnl" is the linear model,
/// "dnn" the default 5x100 network; "mlp:AxBx..." spells custom widths.
struct ModelDesc {
  std::string name;
  std::vector<int> hidden;
};

inline ModelDesc parse_model_desc(const std::string& s) {
  if (s == "bnl") return {"bnl", {}};
  if (s == "dnn") return {"dnn", {100, 100, 100, 100, 100}};
  if (s.rfind("mlp:", 0) == 0) {
    ModelDesc m{s, {}};
    std::stringstream ss(s.substr(4));
    std::string w;
    while (std::getline(ss, w, 'x')) {
      const int width = std::stoi(w);
      if (width < 1) throw std::invalid_argument("model widths must be >= 1");
      m.hidden.push_back(width);
    }
    if (m.hidden.empty()) throw std::invalid_argument("mlp: needs at least one width");
    return m;
  }
  throw std::invalid_argument("unknown model descriptor: " + s);
}

/// Per-scenario default scale of the true weights when the config leaves
/// it at 0 (auto).
inline double default_weight_scale(Scenario s, int d) {
  switch (s) {
    case Scenario::S1: return d >= 35 ? 1.25 : 0.75;
    case Scenario::S2: return d >= 35 ? 2.5 : 1.75;
    case Scenario::S3: return 0.75;
  }
  throw std::invalid_argument("unknown scenario");
}

struct SweepConfig {
  std::vector<Scenario> scenarios{Scenario::S1, Scenario::S2, Scenario::S3};
  std::vector<int> dims{20, 50};
  std::vector<long> sample_sizes{100, 1000, 10000, 100000, 1000000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<ModelDesc> models{parse_model_desc("bnl"), parse_model_desc("dnn")};
  TrainConfig train;
  MetricConfig metrics;
  double weight_scale = 0.0;  // 0 = per-scenario default
  bool full = false;          // unlock N > 10^5 for non-linear models
  bool emp_rad = false;
  EmpRadConfig emp_rad_cfg;
  int curve_points = 41;
  double curve_min = -3.0;
  double curve_max = 3.0;
  bool save_models = false;
  std::string out_dir = "results";
  int threads = 0;  // 0 = hardware default; not part of the config hash

  void validate() const {
    if (scenarios.empty() || dims.empty() || sample_sizes.empty() || seeds.empty() ||
        models.empty()) {
      throw std::invalid_argument("sweep config: empty list");
    }
    if (!std::is_sorted(sample_sizes.begin(), sample_sizes.end())) {
      throw std::invalid_argument("sweep config: sample sizes must ascend");
    }
    for (long n : sample_sizes) {
      if (n < 1) throw std::invalid_argument("sweep config: sample sizes must be >= 1");
    }
    for (int d : dims) {
      if (d < 2) throw std::invalid_argument("sweep config: dims must be >= 2");
    }
    if (curve_points < 2 || !(curve_max > curve_min)) {
      throw std::invalid_argument("sweep config: bad curve grid");
    }
    train.validate();
    metrics.validate();
    emp_rad_cfg.validate();
  }
};

/// Canonical text form: fixed field order, normalized numbers. This is
/// what the config hash commits to; execution details (threads, output
/// directory) are deliberately excluded.
inline std::string sweep_config_text(const SweepConfig& c) {
  std::ostringstream o;
  auto list = [&o](const std::string& key, const auto& items, auto fmt) {
    o << key << " = ";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) o << ",";
      o << fmt(items[i]);
    }
    o << "\n";
  };
  o << "[sweep]\n";
  list("scenarios", c.scenarios, [](Scenario s) { return to_string(s); });
  list("dims", c.dims, [](int d) { return std::to_string(d); });
  list("sample_sizes", c.sample_sizes, [](long n) { return std::to_string(n); });
  list("seeds", c.seeds, [](std::uint64_t s) { return std::to_string(s); });
  list("models", c.models, [](const ModelDesc& m) { return m.name; });
  o << "weight_scale = " << fmt_g9(c.weight_scale) << "\n";
  o << "full = " << (c.full ? "true" : "false") << "\n";
  o << "emp_rad = " << (c.emp_rad ? "true" : "false") << "\n";
  o << "curve_points = " << c.curve_points << "\n";
  o << "curve_min = " << fmt_g9(c.curve_min) << "\n";
  o << "curve_max = " << fmt_g9(c.curve_max) << "\n";
  o << "save_models = " << (c.save_models ? "true" : "false") << "\n";
  o << "[train]\n";
  o << "learning_rate = " << fmt_g9(c.train.learning_rate) << "\n";
  o << "beta1 = " << fmt_g9(c.train.beta1) << "\n";
  o << "beta2 = " << fmt_g9(c.train.beta2) << "\n";
  o << "adam_eps = " << fmt_g9(c.train.adam_eps) << "\n";
  o << "batch_size = " << c.train.batch_size << "\n";
  o << "max_epochs = " << c.train.max_epochs << "\n";
  o << "max_steps = " << c.train.max_steps << "\n";
  o << "l1 = " << fmt_g9(c.train.l1) << "\n";
  o << "l2 = " << fmt_g9(c.train.l2) << "\n";
  o << "early_stop_patience = "
    << (c.train.early_stop_patience ? std::to_string(*c.train.early_stop_patience)
                                    : std::string("none"))
    << "\n";
  o << "[metrics]\n";
  o << "gamma = " << fmt_g9(c.metrics.gamma) << "\n";
  o << "eval_mc_size = " << c.metrics.eval_mc_size << "\n";
  o << "[emp_rad]\n";
  o << "eps_draws = " << c.emp_rad_cfg.eps_draws << "\n";
  o << "restarts = " << c.emp_rad_cfg.restarts << "\n";
  o << "ascent_steps = " << c.emp_rad_cfg.ascent_steps << "\n";
  o << "ascent_batch = " << c.emp_rad_cfg.ascent_batch << "\n";
  o << "step_fraction = " << fmt_g9(c.emp_rad_cfg.step_fraction) << "\n";
  return o.str();
}

inline std::string sweep_config_hash(const SweepConfig& c) {
  return hash_hex(sweep_config_text(c));
}

namespace detail {

template <typename T>
T parse_num(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_floating_point_v<T>) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("junk");
      return static_cast<T>(v);
    } else {
      const long long v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument("junk");
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value '" + s + "' for " + what);
  }
}

inline bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + s + "' for " + what);
}

}  // namespace detail

/// Builds a SweepConfig from parsed key/value text, starting from the
/// defaults. Unknown keys are rejected so typos cannot silently revert a
/// field to its default.
inline SweepConfig parse_sweep_config(const KvConfig& kv) {
  SweepConfig c;
  static const std::map<std::string, std::vector<std::string>> known = {
      {"sweep",
       {"scenarios", "dims", "sample_sizes", "seeds", "models", "weight_scale", "full",
        "emp_rad", "curve_points", "curve_min", "curve_max", "save_models", "out_dir",
        "threads"}},
      {"train",
       {"learning_rate", "beta1", "beta2", "adam_eps", "batch_size", "max_epochs",
        "max_steps", "l1", "l2", "early_stop_patience"}},
      {"metrics", {"gamma", "eval_mc_size"}},
      {"emp_rad",
       {"eps_draws", "restarts", "ascent_steps", "ascent_batch", "step_fraction"}},
  };
  for (const auto& [section, keys] : kv.sections) {
    const auto it = known.find(section);
    if (it == known.end()) {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw std::invalid_argument("config: unknown key '" + key + "' in [" + section +
                                    "]");
      }
      (void)value;
    }
  }
  using detail::parse_bool;
  using detail::parse_num;
  if (kv.has("sweep", "scenarios")) {
    c.scenarios.clear();
    for (const auto& s : split_list(kv.get("sweep", "scenarios", "")))
      c.scenarios.push_back(scenario_from_string(s));
  }
  if (kv.has("sweep", "dims")) {
    c.dims.clear();
    for (const auto& s : split_list(kv.get("sweep", "dims", "")))
      c.dims.push_back(parse_num<int>(s, "dims"));
  }
  if (kv.has("sweep", "sample_sizes")) {
    c.sample_sizes.clear();
    for (const auto& s : split_list(kv.get("sweep", "sample_sizes", "")))
      c.sample_sizes.push_back(parse_num<long>(s, "sample_sizes"));
  }
  if (kv.has("sweep", "seeds")) {
    c.seeds.clear();
    for (const auto& s : split_list(kv.get("sweep", "seeds", "")))
      c.seeds.push_back(parse_num<long long>(s, "seeds"));
  }
  if (kv.has("sweep", "models")) {
    c.models.clear();
    for (const auto& s : split_list(kv.get("sweep", "models", "")))
      c.models.push_back(parse_model_desc(s));
  }
  if (kv.has("sweep", "weight_scale"))
    c.weight_scale = parse_num<double>(kv.get("sweep", "weight_scale", ""), "weight_scale");
  if (kv.has("sweep", "full")) c.full = parse_bool(kv.get("sweep", "full", ""), "full");
  if (kv.has("sweep", "emp_rad"))
    c.emp_rad = parse_bool(kv.get("sweep", "emp_rad", ""), "emp_rad");
  if (kv.has("sweep", "curve_points"))
    c.curve_points = parse_num<int>(kv.get("sweep", "curve_points", ""), "curve_points");
  if (kv.has("sweep", "curve_min"))
    c.curve_min = parse_num<double>(kv.get("sweep", "curve_min", ""), "curve_min");
  if (kv.has("sweep", "curve_max"))
    c.curve_max = parse_num<double>(kv.get("sweep", "curve_max", ""), "curve_max");
  if (kv.has("sweep", "save_models"))
    c.save_models = parse_bool(kv.get("sweep", "save_models", ""), "save_models");
  if (kv.has("sweep", "out_dir")) c.out_dir = kv.get("sweep", "out_dir", "");
  if (kv.has("sweep", "threads"))
    c.threads = parse_num<int>(kv.get("sweep", "threads", ""), "threads");
  if (kv.has("train", "learning_rate"))
    c.train.learning_rate = parse_num<double>(kv.get("train", "learning_rate", ""), "learning_rate");
  if (kv.has("train", "beta1"))
    c.train.beta1 = parse_num<double>(kv.get("train", "beta1", ""), "beta1");
  if (kv.has("train", "beta2"))
    c.train.beta2 = parse_num<double>(kv.get("train", "beta2", ""), "beta2");
  if (kv.has("train", "adam_eps"))
    c.train.adam_eps = parse_num<double>(kv.get("train", "adam_eps", ""), "adam_eps");
  if (kv.has("train", "batch_size"))
    c.train.batch_size = parse_num<int>(kv.get("train", "batch_size", ""), "batch_size");
  if (kv.has("train", "max_epochs"))
    c.train.max_epochs = parse_num<int>(kv.get("train", "max_epochs", ""), "max_epochs");
  if (kv.has("train", "max_steps"))
    c.train.max_steps = parse_num<long>(kv.get("train", "max_steps", ""), "max_steps");
  if (kv.has("train", "l1")) c.train.l1 = parse_num<double>(kv.get("train", "l1", ""), "l1");
  if (kv.has("train", "l2")) c.train.l2 = parse_num<double>(kv.get("train", "l2", ""), "l2");
  if (kv.has("train", "early_stop_patience")) {
    const std::string v = kv.get("train", "early_stop_patience", "");
    if (v == "none") {
      c.train.early_stop_patience.reset();
    } else {
      c.train.early_stop_patience = parse_num<int>(v, "early_stop_patience");
    }
  }
  if (kv.has("metrics", "gamma"))
    c.metrics.gamma = parse_num<double>(kv.get("metrics", "gamma", ""), "gamma");
  if (kv.has("metrics", "eval_mc_size"))
    c.metrics.eval_mc_size =
        parse_num<long>(kv.get("metrics", "eval_mc_size", ""), "eval_mc_size");
  if (kv.has("emp_rad", "eps_draws"))
    c.emp_rad_cfg.eps_draws = parse_num<int>(kv.get("emp_rad", "eps_draws", ""), "eps_draws");
  if (kv.has("emp_rad", "restarts"))
    c.emp_rad_cfg.restarts = parse_num<int>(kv.get("emp_rad", "restarts", ""), "restarts");
  if (kv.has("emp_rad", "ascent_steps"))
    c.emp_rad_cfg.ascent_steps =
        parse_num<int>(kv.get("emp_rad", "ascent_steps", ""), "ascent_steps");
  if (kv.has("emp_rad", "ascent_batch"))
    c.emp_rad_cfg.ascent_batch =
        parse_num<int>(kv.get("emp_rad", "ascent_batch", ""), "ascent_batch");
  if (kv.has("emp_rad", "step_fraction"))
    c.emp_rad_cfg.step_fraction =
        parse_num<double>(kv.get("emp_rad", "step_fraction", ""), "step_fraction");
  c.validate();
  return c;
}

// ---- DgpSpec <-> declarative text ----

inline std::string spec_to_config(const DgpSpec& spec) {
  std::ostringstream o;
  o << "[dgp]\n";
  o << "scenario = " << to_string(spec.scenario) << "\n";
  o << "d = " << spec.d << "\n";
  o << "weight_scale = " << fmt_g9(spec.weight_scale) << "\n";
  o << "seed = " << spec.seed << "\n";
  return o.str();
}

inline DgpSpec spec_from_config(const KvConfig& kv) {
  if (!kv.sections.count("dgp")) throw std::invalid_argument("config: missing [dgp]");
  const Scenario sc = scenario_from_string(kv.get("dgp", "scenario", ""));
  const int d = detail::parse_num<int>(kv.get("dgp", "d", ""), "d");
  const double scale =
      detail::parse_num<double>(kv.get("dgp", "weight_scale", ""), "weight_scale");
  const std::uint64_t seed =
      detail::parse_num<long long>(kv.get("dgp", "seed", ""), "seed");
  return make_spec(sc, d, scale, seed);
}

// ---- sweep cells ----

struct CellKey {
  Scenario scenario;
  std::string model;
  int d;
  long n;
  std::uint64_t seed;

  std::string str() const {
    std::ostringstream o;
    std::string m = model;
    std::replace(m.begin(), m.end(), ':', '-');  // keep keys filename-safe
    o << to_string(scenario) << "_" << m << "_d" << d << "_n" << n << "_s" << seed;
    return o.str();
  }
};

/// Everything measured for one trained model on one synthetic cell.
struct CellResult {
  CellKey key;
  std::string status = "ok";  // or error:<message>
  int d_observed = 0;
  int transformed_dim = 0;
  double weight_scale = 0.0;
  int epochs = 0;
  double final_train_loss = 0.0;
  double eval_logloss = 0.0;
  double eval_pred_loss = 0.0;
  double eval_pred_se = 0.0;
  double eval_mse = 0.0;
  double ramp = 0.0;
  double margin = 0.0;
  double gamma = 0.0;
  McValue interp;
  double market = 0.0;
  BayesLosses bayes;
  // filled after the group pass
  double pred_reference = 0.0;
  double pred_estimation_error = 0.0;
  double pred_approximation_error = 0.0;
  double interp_reference = 0.0;
  double interp_estimation_error = 0.0;
  double interp_approximation_error = 0.0;
  std::size_t param_count = 0;
  int depth = 0;
  BoundReport bound;
  double train_seconds = 0.0;  // sidecar only; volatile across runs
  ProbCurve curve;
  MlpParams params;
  TrainHistory history;
};

inline std::uint64_t stream_id(const std::string& s) { return fnv1a64(s); }

/// Seed of the DGP for one (scenario, d, seed) group: shared by every N
/// and model so that convergence curves vary the sample, not the truth.
inline std::uint64_t spec_seed_for(Scenario sc, int d, std::uint64_t seed) {
  return fnv1a64("spec/" + to_string(sc) + "/" + std::to_string(d)) ^ seed;
}

inline CellResult run_cell(const SweepConfig& cfg, Scenario sc, const ModelDesc& model,
                           int d, long n, std::uint64_t seed) {
  CellResult r;
  r.key = {sc, model.name, d, n, seed};
  const double scale =
      cfg.weight_scale > 0.0 ? cfg.weight_scale : default_weight_scale(sc, d);
  r.weight_scale = scale;
  const std::uint64_t spec_seed = spec_seed_for(sc, d, seed);
  const DgpSpec spec = make_spec(sc, d, scale, spec_seed);
  r.d_observed = spec.observed_dim();
  r.transformed_dim = spec.transformed_dim();

  Rng sample_rng(spec_seed, stream_id("train/" + std::to_string(n)));
  const Dataset train_set = sample_dataset(spec, static_cast<std::size_t>(n), sample_rng);
  Rng eval_rng(spec_seed, stream_id("eval"));
  const Dataset eval_set =
      sample_dataset(spec, cfg.metrics.eval_mc_size, eval_rng);

  MlpArch arch{spec.observed_dim(), model.hidden};
  TrainConfig tc = cfg.train;
  tc.seed = spec_seed ^ stream_id("fit/" + std::to_string(n) + "/" + model.name);

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult fit = train_erm(arch, train_set, tc);
  r.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  r.epochs = fit.history.epochs();
  r.final_train_loss = fit.history.train_loss.back();
  const auto fwd = forward(fit.params, eval_set.X);
  r.eval_logloss = log_loss(fwd.probs, eval_set.y);
  r.eval_pred_loss = prediction_loss(fit.params, eval_set);
  r.eval_pred_se = std::sqrt(r.eval_pred_loss * (1.0 - r.eval_pred_loss) /
                             static_cast<double>(eval_set.n()));
  r.eval_mse = mse_loss(fit.params, eval_set);
  r.gamma = cfg.metrics.gamma;
  r.ramp = ramp_loss(fit.params, eval_set, r.gamma);
  r.margin = margin_loss(fit.params, eval_set, r.gamma);
  Rng interp_rng(spec_seed,
                 stream_id("interp/" + std::to_string(n) + "/" + model.name));
  r.interp = interpretation_loss(fit.params, spec, cfg.metrics.eval_mc_size, interp_rng);
  r.market = market_share(fit.params, eval_set);
  Rng bayes_rng(spec_seed, stream_id("bayes"));
  r.bayes = bayes_optimal_losses(
      spec, std::max<std::size_t>(cfg.metrics.eval_mc_size, 10000), bayes_rng);

  r.param_count = fit.params.param_count();
  r.depth = fit.params.depth();
  std::optional<McValue> emp;
  if (cfg.emp_rad) {
    Rng rad_rng(spec_seed,
                stream_id("emprad/" + std::to_string(n) + "/" + model.name));
    emp = empirical_rademacher(arch, train_set.X, layer_norms(fit.params),
                               cfg.emp_rad_cfg, rad_rng);
  }
  r.bound = build_bound_report(fit.params, static_cast<double>(n), r.gamma, r.margin, emp);

  // plot-ready slice along the first observed input
  const int j = spec.observed_indices().front();
  std::vector<double> grid(cfg.curve_points);
  for (int i = 0; i < cfg.curve_points; ++i) {
    grid[i] = cfg.curve_min + (cfg.curve_max - cfg.curve_min) * i /
                                  static_cast<double>(cfg.curve_points - 1);
  }
  r.curve = prob_curve(fit.params, j, std::move(grid), std::vector<double>(spec.d, 0.0),
                       &spec);
  r.params = std::move(fit.params);
  r.history = std::move(fit.history);
  return r;
}

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "scenario", "model", "d", "d_observed", "n", "seed", "weight_scale",
      "transformed_dim", "status", "epochs", "final_train_loss", "eval_logloss",
      "eval_pred_loss", "eval_pred_se", "eval_mse", "ramp_loss", "margin_loss", "gamma",
      "interp_loss", "interp_se", "market_share", "bayes_pred_loss", "bayes_pred_se",
      "bayes_mse", "bayes_mse_se", "pred_reference", "pred_estimation_error",
      "pred_approximation_error", "interp_reference", "interp_estimation_error",
      "interp_approximation_error", "param_count", "depth", "vc_dim", "vc_rad_bound",
      "norm_oneinf_bound", "norm_frobenius_bound", "prediction_upper",
      "interpretation_upper", "emp_rad", "emp_rad_se", "emp_rad_warning", "config_hash"};
  return cols;
}

inline std::vector<std::string> result_row(const CellResult& r,
                                           const std::string& config_hash) {
  std::vector<std::string> row;
  row.reserve(result_columns().size());
  row.push_back(to_string(r.key.scenario));
  row.push_back(r.key.model);
  row.push_back(std::to_string(r.key.d));
  row.push_back(std::to_string(r.d_observed));
  row.push_back(std::to_string(r.key.n));
  row.push_back(std::to_string(r.key.seed));
  row.push_back(fmt_g9(r.weight_scale));
  row.push_back(std::to_string(r.transformed_dim));
  row.push_back(r.status);
  if (r.status != "ok") {
    while (row.size() < result_columns().size() - 1) row.emplace_back();
    row.push_back(config_hash);
    return row;
  }
  row.push_back(std::to_string(r.epochs));
  row.push_back(fmt_g9(r.final_train_loss));
  row.push_back(fmt_g9(r.eval_logloss));
  row.push_back(fmt_g9(r.eval_pred_loss));
  row.push_back(fmt_g9(r.eval_pred_se));
  row.push_back(fmt_g9(r.eval_mse));
  row.push_back(fmt_g9(r.ramp));
  row.push_back(fmt_g9(r.margin));
  row.push_back(fmt_g9(r.gamma));
  row.push_back(fmt_g9(r.interp.value));
  row.push_back(fmt_g9(r.interp.se));
  row.push_back(fmt_g9(r.market));
  row.push_back(fmt_g9(r.bayes.min_prediction_loss));
  row.push_back(fmt_g9(r.bayes.prediction_se));
  row.push_back(fmt_g9(r.bayes.irreducible_mse));
  row.push_back(fmt_g9(r.bayes.mse_se));
  row.push_back(fmt_g9(r.pred_reference));
  row.push_back(fmt_g9(r.pred_estimation_error));
  row.push_back(fmt_g9(r.pred_approximation_error));
  row.push_back(fmt_g9(r.interp_reference));
  row.push_back(fmt_g9(r.interp_estimation_error));
  row.push_back(fmt_g9(r.interp_approximation_error));
  row.push_back(std::to_string(r.param_count));
  row.push_back(std::to_string(r.depth));
  row.push_back(fmt_g9(r.bound.vc_dim));
  row.push_back(fmt_g9(r.bound.vc_rad));
  row.push_back(fmt_g9(r.bound.norm_oneinf));
  row.push_back(fmt_g9(r.bound.norm_frobenius));
  row.push_back(fmt_g9(r.bound.prediction_upper_value));
  row.push_back(fmt_g9(r.bound.interpretation_upper_value));
  row.push_back(r.bound.empirical_rad ? fmt_g9(r.bound.empirical_rad->value) : "");
  row.push_back(r.bound.empirical_rad ? fmt_g9(r.bound.empirical_rad->se) : "");
  row.push_back(r.bound.empirical_rad ? (r.bound.empirical_rad_warning ? "1" : "0") : "");
  row.push_back(config_hash);
  return row;
}

struct SweepOutput {
  std::vector<CellResult> cells;  // sorted by key
  std::string config_hash;
};

/// Runs the whole grid. Cells execute independently (parallel when OpenMP
/// is available) and are merged in deterministic key order; a failing
/// cell becomes an error row and the sweep continues. Non-linear models
/// skip N > 10^5 unless cfg.full is set.
inline SweepOutput run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Job {
    Scenario sc;
    const ModelDesc* model;
    int d;
    long n;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Scenario sc : cfg.scenarios) {
    for (const ModelDesc& m : cfg.models) {
      for (int d : cfg.dims) {
        for (long n : cfg.sample_sizes) {
          if (!cfg.full && !m.hidden.empty() && n > 100000) continue;
          for (std::uint64_t seed : cfg.seeds) {
            jobs.push_back({sc, &m, d, n, seed});
          }
        }
      }
    }
  }

  SweepOutput out;
  out.config_hash = sweep_config_hash(cfg);
  out.cells.resize(jobs.size());
#if defined(_OPENMP)
  const int n_threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#else
  const int n_threads = 1;
  (void)n_threads;
#endif
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (long long i = 0; i < static_cast<long long>(jobs.size()); ++i) {
    const Job& job = jobs[i];
    try {
      out.cells[i] = run_cell(cfg, job.sc, *job.model, job.d, job.n, job.seed);
    } catch (const std::exception& e) {
      CellResult r;
      r.key = {job.sc, job.model->name, job.d, job.n, job.seed};
      r.status = std::string("error:") + e.what();
      out.cells[i] = std::move(r);
    }
  }

  std::sort(out.cells.begin(), out.cells.end(),
            [](const CellResult& a, const CellResult& b) { return a.key.str() < b.key.str(); });

  // reference-class losses: the model's seed-averaged loss at the largest
  // N it was run at, standing in for the unobservable L(f*_F)
  std::map<std::string, std::pair<double, double>> reference;  // group -> (pred, interp)
  std::map<std::string, std::pair<long, int>> best_n;          // group -> (N, count)
  auto group_of = [](const CellResult& r) {
    return to_string(r.key.scenario) + "/" + r.key.model + "/" + std::to_string(r.key.d);
  };
  for (const auto& c : out.cells) {
    if (c.status != "ok") continue;
    auto& bn = best_n[group_of(c)];
    if (c.key.n > bn.first) bn = {c.key.n, 0};
  }
  for (const auto& c : out.cells) {
    if (c.status != "ok") continue;
    const auto g = group_of(c);
    if (c.key.n != best_n[g].first) continue;
    auto& ref = reference[g];
    ref.first += c.eval_pred_loss;
    ref.second += c.interp.value;
    best_n[g].second += 1;
  }
  for (auto& [g, ref] : reference) {
    ref.first /= best_n[g].second;
    ref.second /= best_n[g].second;
  }
  for (auto& c : out.cells) {
    if (c.status != "ok") continue;
    const auto& ref = reference[group_of(c)];
    const auto pred = decompose_error(c.eval_pred_loss, ref.first,
                                      c.bayes.min_prediction_loss);
    c.pred_reference = pred.reference_class_loss;
    c.pred_estimation_error = pred.estimation_error;
    c.pred_approximation_error = pred.approximation_error;
    const auto interp = decompose_error(c.interp.value, ref.second, 0.0);
    c.interp_reference = interp.reference_class_loss;
    c.interp_estimation_error = interp.estimation_error;
    c.interp_approximation_error = interp.approximation_error;
  }
  return out;
}

inline void write_results_csv(const std::vector<CellResult>& cells,
                              const std::string& config_hash, const std::string& path) {
  CsvWriter w(path, result_columns());
  for (const auto& c : cells) w.write_row(result_row(c, config_hash));
  w.close();
}

inline void write_curve_csv(const ProbCurve& curve, const std::string& path) {
  std::vector<std::string> header = {"x_value", "model_prob"};
  if (curve.true_probs) header.push_back("true_prob");
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    std::vector<std::string> row = {fmt_g9(curve.grid[i]), fmt_g9(curve.probs[i])};
    if (curve.true_probs) row.push_back(fmt_g9((*curve.true_probs)[i]));
    w.write_row(row);
  }
  w.close();
}

inline void write_history_csv(const TrainHistory& h, const std::string& path) {
  CsvWriter w(path, {"epoch", "train_loss", "val_loss", "seconds"});
  for (int e = 0; e < h.epochs(); ++e) {
    w.write_row({std::to_string(e + 1), fmt_g9(h.train_loss[e]),
                 h.val_loss.empty() ? "" : fmt_g9(h.val_loss[e]), fmt_g9(h.seconds[e])});
  }
  w.close();
}

/// Full file-emitting sweep: results.csv, curves/, optional models/, a
/// run manifest carrying the config hash, and a volatile timing sidecar.
inline SweepOutput run_sweep_to_dir(const SweepConfig& cfg) {
  namespace fs = std::filesystem;
  SweepOutput out = run_sweep(cfg);
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir / "curves");
  if (cfg.save_models) fs::create_directories(dir / "models");
  write_results_csv(out.cells, out.config_hash, (dir / "results.csv").string());
  {
    CsvWriter t((dir / "timings.csv").string(), {"cell", "train_seconds"});
    for (const auto& c : out.cells) {
      if (c.status == "ok") t.write_row({c.key.str(), fmt_g9(c.train_seconds)});
    }
    t.close();
  }
  for (const auto& c : out.cells) {
    if (c.status != "ok") continue;
    write_curve_csv(c.curve, (dir / "curves" / (c.key.str() + ".csv")).string());
    if (cfg.save_models) {
      save_params(c.params, (dir / "models" / (c.key.str() + ".bin")).string());
    }
  }
  std::ofstream manifest(dir / "run_manifest.txt", std::ios::binary);
  manifest << "config_hash = " << out.config_hash << "\n\n" << sweep_config_text(cfg);
  return out;
}

}  // namespace logitlab
