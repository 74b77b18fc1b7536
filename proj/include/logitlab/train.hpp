#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "logitlab/dgp.hpp"
#include "logitlab/model.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

struct TrainConfig {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 128;
  int max_epochs = 200;
  long max_steps = 0;  // 0 = no cap; otherwise bounds total optimizer steps
  double l1 = 0.0;
  double l2 = 1e-5;
  std::optional<int> early_stop_patience;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (l1 < 0.0 || l2 < 0.0) throw std::invalid_argument("penalties must be >= 0");
    if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
  }
};

/// Mean negative log-likelihood with probabilities clipped 1e-12 away
/// from the boundaries.
inline double log_loss(std::span<const double> probs, std::span<const int> y) {
  if (probs.size() != y.size()) {
    throw std::invalid_argument("log_loss: length mismatch");
  }
  if (probs.empty()) throw std::invalid_argument("log_loss: empty input");
  constexpr double kClip = 1e-12;
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::min(1.0 - kClip, std::max(kClip, probs[i]));
    s += y[i] ? -std::log(p) : -std::log1p(-p);
  }
  return s / static_cast<double>(probs.size());
}

struct AdamState {
  MlpParams m;
  MlpParams v;
  long step = 0;

  static AdamState zeros_like(const MlpParams& params) {
    AdamState s;
    s.m = MlpParams::zeros(params.arch());
    s.v = MlpParams::zeros(params.arch());
    return s;
  }
};

namespace detail {
inline void adam_update_array(std::vector<double>& w, const std::vector<double>& g,
                              std::vector<double>& m, std::vector<double>& v,
                              double lr, double b1, double b2, double eps,
                              double bc1, double bc2) {
  for (std::size_t t = 0; t < w.size(); ++t) {
    m[t] = b1 * m[t] + (1.0 - b1) * g[t];
    v[t] = b2 * v[t] + (1.0 - b2) * g[t] * g[t];
    const double mhat = m[t] / bc1;
    const double vhat = v[t] / bc2;
    w[t] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}
}  // namespace detail

/// One bias-corrected Adam update, applied elementwise to every parameter.
inline void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
                      const TrainConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (int j = 0; j < params.depth(); ++j) {
    detail::adam_update_array(params.weights[j].data(), grads.weights[j].data(),
                              state.m.weights[j].data(), state.v.weights[j].data(),
                              cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps,
                              bc1, bc2);
    detail::adam_update_array(params.biases[j], grads.biases[j],
                              state.m.biases[j], state.v.biases[j],
                              cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps,
                              bc1, bc2);
  }
}

struct TrainHistory {
  std::vector<double> train_loss;  // penalized objective per epoch
  std::vector<double> val_loss;    // empty when no validation set given
  std::vector<double> seconds;     // wall time per epoch

  int epochs() const { return static_cast<int>(train_loss.size()); }
};

struct TrainResult {
  MlpParams params;
  TrainHistory history;
};

/// Thrown when the objective stops being finite; carries the last finite
/// parameters and the history up to that point.
struct TrainDivergence : std::runtime_error {
  TrainDivergence(MlpParams p, TrainHistory h)
      : std::runtime_error("training diverged: objective became non-finite"),
        last_params(std::move(p)), history(std::move(h)) {}
  MlpParams last_params;
  TrainHistory history;
};

/// Mini-batch Adam on the penalized log-loss, from He initialization.
/// Shuffles every epoch with the run's own generator and keeps the last
/// partial batch. Returns the parameters with the best epoch objective
/// seen, so the reported final loss never exceeds the initial one.
inline TrainResult train_erm(const MlpArch& arch, const Dataset& data,
                             const TrainConfig& cfg,
                             const Dataset* validation = nullptr) {
  cfg.validate();
  arch.validate();
  if (data.n() < 1) throw std::invalid_argument("train_erm: empty dataset");
  if (static_cast<int>(data.X.cols()) != arch.input_dim) {
    throw std::invalid_argument("train_erm: arch input_dim != dataset columns");
  }

  Rng rng(cfg.seed, 0x7261696eULL);
  Rng init_rng = rng.split(1);
  Rng shuffle_rng = rng.split(2);

  MlpParams params = init_he(arch, init_rng);
  AdamState state = AdamState::zeros_like(params);
  TrainHistory history;

  const std::size_t n = data.n();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  MlpParams best_params = params;
  double best_loss = std::numeric_limits<double>::infinity();
  double monitor_best = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  long steps_done = 0;

  const int epoch_cap = [&] {
    if (cfg.max_steps <= 0) return cfg.max_epochs;
    const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
    const long allowed = std::max<long>(1, cfg.max_steps / steps_per_epoch);
    return static_cast<int>(std::min<long>(cfg.max_epochs, allowed));
  }();

  for (int epoch = 0; epoch < epoch_cap; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    double data_loss_sum = 0.0;  // row-weighted sum of batch losses
    double last_penalty = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const std::size_t rows = stop - start;
      Matrix xb(rows, data.X.cols());
      std::vector<int> yb(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = order[start + r];
        std::copy(data.X.row(src), data.X.row(src) + data.X.cols(), xb.row(r));
        yb[r] = data.y[src];
      }
      GradResult g;
      try {
        g = gradients_with_loss(params, xb, yb, cfg.l1, cfg.l2);
      } catch (const std::domain_error&) {  // non-finite activations
        throw TrainDivergence(std::move(best_params), std::move(history));
      }
      if (!std::isfinite(g.loss())) {
        throw TrainDivergence(std::move(best_params), std::move(history));
      }
      data_loss_sum += g.data_loss * static_cast<double>(rows);
      last_penalty = g.penalty;
      adam_step(params, g.grad, state, cfg);
      ++steps_done;
    }

    const double epoch_loss = data_loss_sum / static_cast<double>(n) + last_penalty;
    history.train_loss.push_back(epoch_loss);
    if (validation) {
      const auto vf = forward(params, validation->X);
      history.val_loss.push_back(log_loss(vf.probs, validation->y));
    }
    history.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best_params = params;
    }
    const double monitored = validation ? history.val_loss.back() : epoch_loss;
    if (monitored < monitor_best - 1e-12) {
      monitor_best = monitored;
      since_improvement = 0;
    } else if (cfg.early_stop_patience &&
               ++since_improvement >= *cfg.early_stop_patience) {
      break;
    }
    if (cfg.max_steps > 0 && steps_done >= cfg.max_steps) break;
  }
  return {std::move(best_params), std::move(history)};
}

}  // namespace logitlab
