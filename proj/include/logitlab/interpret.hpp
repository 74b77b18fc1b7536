#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "logitlab/dgp.hpp"
#include "logitlab/metrics.hpp"
#include "logitlab/model.hpp"
#include "logitlab/numerics.hpp"

namespace logitlab {

/// One-dimensional slice of a fitted choice-probability function: one
/// coordinate swept over a grid, the rest pinned at a baseline. When a
/// generating spec is supplied the true curve rides along.
struct ProbCurve {
  int varied_index = 0;
  std::vector<double> grid;
  std::vector<double> baseline;
  std::vector<double> probs;
  std::optional<std::vector<double>> true_probs;
};

/// Sweeps coordinate j of the model input over `grid`. With a spec, x and
/// the baseline live in the full input space and j must name an observed
/// coordinate; the model is evaluated on the observed projection.
inline ProbCurve prob_curve(const MlpParams& model, int j,
                            std::vector<double> grid, std::vector<double> baseline,
                            const DgpSpec* spec = nullptr) {
  const int dim = spec ? spec->d : model.input_dim();
  if (j < 0 || j >= dim) throw std::out_of_range("prob_curve: index out of range");
  if (static_cast<int>(baseline.size()) != dim) {
    throw std::invalid_argument("prob_curve: baseline length != input dim");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("prob_curve: grid must be strictly increasing");
    }
  }
  if (spec) {
    const auto keep = spec->observed_indices();
    if (static_cast<int>(keep.size()) != model.input_dim()) {
      throw std::invalid_argument("prob_curve: model input dim != observed dim");
    }
    if (std::find(keep.begin(), keep.end(), j) == keep.end()) {
      throw std::out_of_range("prob_curve: varied coordinate is dropped in this spec");
    }
  }

  ProbCurve curve;
  curve.varied_index = j;
  curve.grid = std::move(grid);
  curve.baseline = std::move(baseline);
  std::vector<double> x = curve.baseline;
  if (spec) curve.true_probs.emplace();
  for (double g : curve.grid) {
    x[j] = g;
    if (spec) {
      curve.probs.push_back(predict_prob(model, spec->observe(x)));
      curve.true_probs->push_back(true_prob(*spec, x));
    } else {
      curve.probs.push_back(predict_prob(model, x));
    }
  }
  return curve;
}

/// d s(x) / d x_j by central difference with a relative step.
inline double derivative(const MlpParams& model, std::span<const double> x, int j) {
  if (j < 0 || j >= model.input_dim()) {
    throw std::out_of_range("derivative: index out of range");
  }
  if (static_cast<int>(x.size()) != model.input_dim()) {
    throw std::invalid_argument("derivative: input length != model dim");
  }
  const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
  std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
  xp[j] += h;
  xm[j] -= h;
  return (predict_prob(model, xp) - predict_prob(model, xm)) / (2.0 * h);
}

/// d log s / d log x_j = (x_j / s) * ds/dx_j. Undefined where x_j is 0.
inline double elasticity(const MlpParams& model, std::span<const double> x, int j) {
  if (j < 0 || j >= model.input_dim()) {
    throw std::out_of_range("elasticity: index out of range");
  }
  if (std::abs(x[j]) <= 1e-6) {
    throw std::domain_error(
        "elasticity: undefined at x_j ~ 0; report the derivative instead");
  }
  const double s = predict_prob(model, x);
  return x[j] / s * derivative(model, x, j);
}

/// Marginal rate of substitution between two inputs: the ratio of the two
/// probability derivatives (value of travel time savings when they are
/// time and cost).
inline double vtts(const MlpParams& model, std::span<const double> x, int j_time,
                   int j_cost) {
  const double d_cost = derivative(model, x, j_cost);
  if (std::abs(d_cost) <= 1e-10) {
    throw std::domain_error("vtts: cost derivative too close to zero");
  }
  return derivative(model, x, j_time) / d_cost;
}

/// V1 - V0 recovered by inverting the sigmoid; matches the raw logit up
/// to float saturation of the probability.
inline double utility_difference(const MlpParams& model, std::span<const double> x) {
  const double p = predict_prob(model, x);
  constexpr double kSat = 1e-15;
  if (!(p > kSat) || !(p < 1.0 - 1e-12)) {
    throw std::domain_error("utility_difference: probability saturated");
  }
  return logit(p);
}

/// Average fitted probability of alternative 1 over a sample.
inline double market_share(const MlpParams& model, const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("market_share: empty dataset");
  const auto fwd = forward(model, data.X);
  double s = 0.0;
  for (double p : fwd.probs) s += p;
  return s / static_cast<double>(data.n());
}

}  // namespace logitlab
