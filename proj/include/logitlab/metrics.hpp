#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "logitlab/dgp.hpp"
#include "logitlab/model.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

struct MetricConfig {
  double gamma = 1.0;
  std::size_t eval_mc_size = 100000;

  void validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
    if (eval_mc_size < 1000) throw std::invalid_argument("eval_mc_size must be >= 10^3");
  }
};

/// A Monte-Carlo estimate together with its standard error.
struct McValue {
  double value = 0.0;
  double se = 0.0;
};

/// Empirical 0/1 loss of the hard rule 1{s(x) >= 0.5}; ties go to class 1.
inline double prediction_loss(const MlpParams& model, const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("prediction_loss: empty dataset");
  const auto fwd = forward(model, data.X);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const int pred = fwd.probs[i] >= 0.5 ? 1 : 0;
    wrong += (pred != data.y[i]);
  }
  return static_cast<double>(wrong) / static_cast<double>(data.n());
}

/// Population mean squared gap between the true and fitted probability
/// functions, integrated over P_x by fresh Monte-Carlo draws. For S3 the
/// model sees only the observed coordinates while s* uses the full input.
inline McValue interpretation_loss(const MlpParams& model, const DgpSpec& spec,
                                   std::size_t mc_size, Rng& rng) {
  if (mc_size < 1) throw std::invalid_argument("interpretation_loss: mc_size >= 1");
  const auto keep = spec.observed_indices();
  if (static_cast<int>(keep.size()) != model.input_dim()) {
    throw std::invalid_argument(
        "interpretation_loss: model input dim != observed dim of spec");
  }
  // batched evaluation keeps the forward pass cheap for big nets
  const std::size_t batch = 4096;
  std::vector<double> x(spec.d);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t done = 0;
  while (done < mc_size) {
    const std::size_t rows = std::min(batch, mc_size - done);
    Matrix xb(rows, keep.size());
    std::vector<double> star(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (double& v : x) v = rng.normal();
      star[r] = true_prob(spec, x);
      for (std::size_t c = 0; c < keep.size(); ++c) {
        xb(r, c) = x[static_cast<std::size_t>(keep[c])];
      }
    }
    const auto fwd = forward(model, xb);
    for (std::size_t r = 0; r < rows; ++r) {
      const double g = (star[r] - fwd.probs[r]) * (star[r] - fwd.probs[r]);
      sum += g;
      sum_sq += g * g;
    }
    done += rows;
  }
  const double m = static_cast<double>(mc_size);
  McValue out;
  out.value = sum / m;
  const double var = std::max(0.0, sum_sq / m - out.value * out.value);
  out.se = std::sqrt(var / m);
  return out;
}

/// Same contract but taking the dataset's provenance; real data carries no
/// spec and is rejected.
inline McValue interpretation_loss(const MlpParams& model, const Dataset& data,
                                   std::size_t mc_size, Rng& rng) {
  if (!data.spec) {
    throw std::invalid_argument(
        "interpretation_loss: dataset has no generating spec (real data)");
  }
  return interpretation_loss(model, *data.spec, mc_size, rng);
}

inline double mse_loss(const MlpParams& model, const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("mse_loss: empty dataset");
  const auto fwd = forward(model, data.X);
  double s = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double e = static_cast<double>(data.y[i]) - fwd.probs[i];
    s += e * e;
  }
  return s / static_cast<double>(data.n());
}

namespace detail {
inline double ramp(double margin, double gamma) {
  if (margin <= 0.0) return 1.0;
  if (margin >= gamma) return 0.0;
  return 1.0 - margin / gamma;
}
}  // namespace detail

/// Mean ramp surrogate of the signed margin (2y-1) * logit(x).
inline double ramp_loss(const MlpParams& model, const Dataset& data, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("ramp_loss: gamma must be > 0");
  if (data.n() < 1) throw std::invalid_argument("ramp_loss: empty dataset");
  const auto fwd = forward(model, data.X);
  double s = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double m = (2.0 * data.y[i] - 1.0) * fwd.logits[i];
    s += detail::ramp(m, gamma);
  }
  return s / static_cast<double>(data.n());
}

/// Fraction of samples whose signed margin is at most gamma.
inline double margin_loss(const MlpParams& model, const Dataset& data, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("margin_loss: gamma must be > 0");
  if (data.n() < 1) throw std::invalid_argument("margin_loss: empty dataset");
  const auto fwd = forward(model, data.X);
  std::size_t c = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double m = (2.0 * data.y[i] - 1.0) * fwd.logits[i];
    c += (m <= gamma);
  }
  return static_cast<double>(c) / static_cast<double>(data.n());
}

/// Excess error split at a reference class optimum. No clamping: Monte-
/// Carlo noise may make estimation_error slightly negative, reported as is.
struct ErrorDecomposition {
  double test_loss = 0.0;
  double reference_class_loss = 0.0;
  double bayes_loss = 0.0;
  double estimation_error = 0.0;     // test - reference
  double approximation_error = 0.0;  // reference - bayes
};

inline ErrorDecomposition decompose_error(double test_loss,
                                          double reference_class_loss,
                                          double bayes_loss) {
  if (!std::isfinite(test_loss) || !std::isfinite(reference_class_loss) ||
      !std::isfinite(bayes_loss)) {
    throw std::invalid_argument("decompose_error: inputs must be finite");
  }
  ErrorDecomposition d;
  d.test_loss = test_loss;
  d.reference_class_loss = reference_class_loss;
  d.bayes_loss = bayes_loss;
  d.estimation_error = test_loss - reference_class_loss;
  // derived from the identity so the two parts sum to the excess exactly,
  // ulp for ulp; differs from (reference - bayes) by at most one rounding
  d.approximation_error = (test_loss - bayes_loss) - d.estimation_error;
  return d;
}

}  // namespace logitlab
