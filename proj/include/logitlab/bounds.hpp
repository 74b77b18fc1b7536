#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "logitlab/matrix.hpp"
#include "logitlab/metrics.hpp"
#include "logitlab/model.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

// All bound formulas use natural logs and set the universal constants
// hidden by the literature's "up to constants" notation to 1.

/// v = T * D * ln(T) for T total coefficients and depth D.
inline double vc_dimension(double t, double depth) {
  if (!(t >= 1.0) || !(depth >= 1.0)) {
    throw std::invalid_argument("vc_dimension: T and D must be >= 1");
  }
  return t * depth * std::log(t);
}

/// Rademacher complexity ceiling from the VC route: 4 sqrt(v ln(N+1) / N).
inline double vc_rad_bound(double v, double n) {
  if (!(v > 0.0) || !(n >= 1.0)) {
    throw std::invalid_argument("vc_rad_bound: need v > 0 and N >= 1");
  }
  return 4.0 * std::sqrt(v * std::log(n + 1.0) / n);
}

/// Contraction route, product of one-infinity norms with the 2^D factor:
/// sqrt(ln d0) * prod_j 2 M(j) / sqrt(N).
inline double norm_oneinf_bound(const LayerNorms& norms, double d0, double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("norm_oneinf_bound: N must be >= 1");
  if (!(d0 >= 2.0)) throw std::invalid_argument("norm_oneinf_bound: d0 must be >= 2");
  double prod = 1.0;
  for (double m : norms.one_inf) prod *= 2.0 * m;
  return std::sqrt(std::log(d0)) * prod / std::sqrt(n);
}

/// Tighter Frobenius form:
/// sqrt(ln d0) * (sqrt(2 ln D) + 1) * prod_j M_F(j) / sqrt(N).
inline double norm_frobenius_bound(const LayerNorms& norms, double d0, double depth,
                                   double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("norm_frobenius_bound: N must be >= 1");
  if (!(d0 >= 2.0)) throw std::invalid_argument("norm_frobenius_bound: d0 must be >= 2");
  if (!(depth >= 1.0)) throw std::invalid_argument("norm_frobenius_bound: D must be >= 1");
  double prod = 1.0;
  for (double m : norms.frobenius) prod *= m;
  return std::sqrt(std::log(d0)) * (std::sqrt(2.0 * std::log(depth)) + 1.0) * prod /
         std::sqrt(n);
}

/// Margin-form ceiling on the population 0/1 loss:
/// empirical gamma-margin loss + (2/gamma) * Rademacher value.
inline double prediction_upper(double margin_loss_value, double gamma, double rad_value) {
  if (margin_loss_value < 0.0 || rad_value < 0.0 || !(gamma > 0.0)) {
    throw std::invalid_argument("prediction_upper: bad inputs");
  }
  return margin_loss_value + 2.0 / gamma * rad_value;
}

/// Ceiling on the estimation error of the interpretation loss: 4 * rad.
inline double interpretation_upper(double rad_value) {
  if (rad_value < 0.0) throw std::invalid_argument("interpretation_upper: rad < 0");
  return 4.0 * rad_value;
}

/// Averages a per-draw supremum over fresh Rademacher sign vectors and
/// reports the mean with its standard error. sup_fn receives one sign
/// vector and returns sup_f |(1/N) sum_i eps_i f(x_i)| for the class at
/// hand (or simply the value, for a singleton class).
inline McValue rademacher_mean(std::size_t n, int eps_draws, Rng& rng,
                               const std::function<double(std::span<const int>)>& sup_fn) {
  if (n < 1 || eps_draws < 1) {
    throw std::invalid_argument("rademacher_mean: need n >= 1 and eps_draws >= 1");
  }
  std::vector<int> eps(n);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < eps_draws; ++k) {
    for (int& e : eps) e = rng.rademacher();
    const double v = sup_fn(eps);
    sum += v;
    sum_sq += v * v;
  }
  McValue out;
  const double m = static_cast<double>(eps_draws);
  out.value = sum / m;
  const double var = std::max(0.0, sum_sq / m - out.value * out.value);
  out.se = eps_draws > 1 ? std::sqrt(var / (m - 1.0)) : 0.0;
  return out;
}

struct EmpRadConfig {
  int eps_draws = 4;       // fresh sign vectors averaged into the estimate
  int restarts = 10;       // ascent restarts per sign vector; max is kept
  int ascent_steps = 60;
  int ascent_batch = 1024; // stochastic gradient batch; full batch if N smaller
  double step_fraction = 0.05;  // per-layer step as a fraction of its budget

  void validate() const {
    if (eps_draws < 1 || restarts < 1 || ascent_steps < 0 || ascent_batch < 1 ||
        !(step_fraction > 0.0)) {
      throw std::invalid_argument("EmpRadConfig: bad fields");
    }
  }
};

namespace detail {

/// Rescales any layer whose Frobenius norm exceeds its budget back onto
/// the budget sphere. Zero budget zeroes the layer.
inline void project_to_budget(MlpParams& p, std::span<const double> budget) {
  for (std::size_t j = 0; j < p.weights.size(); ++j) {
    double fro = 0.0;
    for (double v : p.weights[j].data()) fro += v * v;
    fro = std::sqrt(fro);
    if (fro > budget[j]) {
      const double scale = fro > 0.0 ? budget[j] / fro : 0.0;
      for (double& v : p.weights[j].data()) v *= scale;
    }
  }
}

/// Signed correlation (1/N) sum_i eps_i Phi(x_i) on the full sample.
inline double correlation_value(const MlpParams& p, const Matrix& x,
                                std::span<const int> eps) {
  const auto fwd = forward(p, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    s += eps[i] * fwd.logits[i];
  }
  return s / static_cast<double>(x.rows());
}

}  // namespace detail

/// Gradient-ascent lower estimate of the empirical Rademacher complexity
/// of the bias-free network class whose layer Frobenius norms stay within
/// the given budget (typically the trained model's own norms). For each
/// sign vector the best of `restarts` constrained ascents is kept; the
/// estimate is the mean over sign vectors, reported with its SE. This is
/// a LOWER estimate of the supremum, not a bound.
inline McValue empirical_rademacher(const MlpArch& arch, const Matrix& x,
                                    const LayerNorms& budget, const EmpRadConfig& cfg,
                                    Rng& rng) {
  arch.validate();
  cfg.validate();
  if (x.rows() < 1) throw std::invalid_argument("empirical_rademacher: empty X");
  if (static_cast<int>(x.cols()) != arch.input_dim) {
    throw std::invalid_argument("empirical_rademacher: X cols != arch input dim");
  }
  if (budget.frobenius.size() != static_cast<std::size_t>(arch.depth())) {
    throw std::invalid_argument("empirical_rademacher: budget depth mismatch");
  }
  const std::size_t n = x.rows();
  Rng ascent_rng = rng.split(1);
  Rng eps_rng = rng.split(2);

  auto sup_fn = [&](std::span<const int> eps) {
    double best = 0.0;
    for (int r = 0; r < cfg.restarts; ++r) {
      Rng init_rng = ascent_rng.split(static_cast<std::uint64_t>(r) + 1);
      Rng batch_rng = init_rng.split(7);
      MlpParams p = init_he(arch, init_rng);
      for (auto& b : p.biases) std::fill(b.begin(), b.end(), 0.0);
      detail::project_to_budget(p, budget.frobenius);

      const std::size_t batch = std::min<std::size_t>(n, cfg.ascent_batch);
      Matrix xb(batch, x.cols());
      Matrix delta(batch, 1);
      for (int step = 0; step < cfg.ascent_steps; ++step) {
        std::vector<std::size_t> idx(batch);
        if (batch == n) {
          for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        } else {
          for (auto& i : idx) i = batch_rng.below(n);
        }
        for (std::size_t i = 0; i < batch; ++i) {
          std::copy(x.row(idx[i]), x.row(idx[i]) + x.cols(), xb.row(i));
          delta(i, 0) = static_cast<double>(eps[idx[i]]) / static_cast<double>(batch);
        }
        auto tr = detail::run_forward(p, xb, true);
        MlpParams g = detail::backprop_from_delta(p, tr, delta);
        // fixed-length ascent step per layer, then project back
        for (std::size_t j = 0; j < p.weights.size(); ++j) {
          double gn = 0.0;
          for (double v : g.weights[j].data()) gn += v * v;
          gn = std::sqrt(gn);
          if (gn <= 0.0) continue;
          const double scale = cfg.step_fraction * budget.frobenius[j] / gn;
          auto& w = p.weights[j].data();
          const auto& gw = g.weights[j].data();
          for (std::size_t t = 0; t < w.size(); ++t) w[t] += scale * gw[t];
        }
        detail::project_to_budget(p, budget.frobenius);
      }
      best = std::max(best, std::abs(detail::correlation_value(p, x, eps)));
    }
    return best;
  };
  return rademacher_mean(n, cfg.eps_draws, eps_rng, sup_fn);
}

/// One row of capacity diagnostics for a trained model on a sample of
/// size n. The empirical estimate is optional (it costs training-scale
/// compute); when present and above the Frobenius bound, the report is
/// flagged rather than rejected, since the estimate approximates a sup
/// from below.
struct BoundReport {
  double vc_dim = 0.0;
  double vc_rad = 0.0;
  double norm_oneinf = 0.0;
  double norm_frobenius = 0.0;
  double prediction_upper_value = 0.0;
  double interpretation_upper_value = 0.0;
  std::optional<McValue> empirical_rad;
  bool empirical_rad_warning = false;
};

inline BoundReport build_bound_report(const MlpParams& params, double n, double gamma,
                                      double margin_loss_value,
                                      std::optional<McValue> empirical_rad = std::nullopt) {
  const auto norms = layer_norms(params);
  const double d0 = std::max(2.0, static_cast<double>(params.input_dim()));
  const double depth = params.depth();
  BoundReport r;
  r.vc_dim = vc_dimension(static_cast<double>(params.param_count()), depth);
  r.vc_rad = vc_rad_bound(r.vc_dim, n);
  r.norm_oneinf = norm_oneinf_bound(norms, d0, n);
  r.norm_frobenius = norm_frobenius_bound(norms, d0, depth, n);
  r.prediction_upper_value = prediction_upper(margin_loss_value, gamma, r.norm_frobenius);
  r.interpretation_upper_value = interpretation_upper(r.norm_frobenius);
  r.empirical_rad = empirical_rad;
  if (empirical_rad &&
      empirical_rad->value > std::min(r.norm_oneinf, r.norm_frobenius)) {
    r.empirical_rad_warning = true;
  }
  return r;
}

}  // namespace logitlab
