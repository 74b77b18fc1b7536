#include <gtest/gtest.h>

#include <cmath>

#include <logitlab/dgp.hpp>
#include <logitlab/interpret.hpp>
#include <logitlab/model.hpp>
#include <logitlab/numerics.hpp>

#include "test_support.hpp"

using namespace logitlab;

namespace {

MlpParams linear_model(std::vector<double> w, double b) {
  MlpParams p = MlpParams::zeros(MlpArch{static_cast<int>(w.size()), {}});
  for (std::size_t j = 0; j < w.size(); ++j) p.weights[0](0, j) = w[j];
  p.biases[0][0] = b;
  return p;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace

TEST(ProbCurve, EmbeddedTrueModelMatchesTrueCurve) {
  const DgpSpec spec = make_spec(Scenario::S1, 5, 0.75, 3);
  std::vector<double> w(spec.w_true.begin(), spec.w_true.end());
  const MlpParams deep = embed_linear_as_mlp(w, 0.0, MlpArch{5, {12, 12}});
  const ProbCurve curve =
      prob_curve(deep, 0, linspace(-3, 3, 41), std::vector<double>(5, 0.0), &spec);
  ASSERT_TRUE(curve.true_probs.has_value());
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    EXPECT_NEAR(curve.probs[i], (*curve.true_probs)[i], 1e-9);
  }
}

TEST(ProbCurve, LinearModelLogitIsAffine) {
  const MlpParams model = linear_model({0.8, -0.4}, 0.2);
  const ProbCurve curve =
      prob_curve(model, 0, linspace(-2, 2, 21), std::vector<double>{0.0, 1.0});
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    const double expected = 0.8 * curve.grid[i] - 0.4 * 1.0 + 0.2;
    EXPECT_NEAR(logit(curve.probs[i]), expected, 1e-9);
  }
}

TEST(ProbCurve, NegativeQuadraticTruthIsBellShaped) {
  DgpSpec spec;
  spec.scenario = Scenario::S2;
  spec.d = 2;
  spec.w_true = {0.3, 0.3, -0.8, -0.8};
  const MlpParams any = MlpParams::zeros(MlpArch{2, {}});
  const ProbCurve curve =
      prob_curve(any, 0, linspace(-4, 4, 81), std::vector<double>(2, 0.0), &spec);
  const auto& truth = *curve.true_probs;
  int sign_changes = 0;
  for (std::size_t i = 2; i < truth.size(); ++i) {
    const double d1 = truth[i - 1] - truth[i - 2];
    const double d2 = truth[i] - truth[i - 1];
    if (d1 > 0 && d2 < 0) ++sign_changes;
    EXPECT_FALSE(d1 < 0 && d2 > 0) << "valley in a bell curve at i=" << i;
  }
  EXPECT_EQ(sign_changes, 1);
}

TEST(ProbCurve, ArgumentChecks) {
  const MlpParams model = linear_model({1.0}, 0.0);
  EXPECT_THROW(prob_curve(model, 1, linspace(0, 1, 5), {0.0}), std::out_of_range);
  EXPECT_THROW(prob_curve(model, 0, {1.0, 1.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(prob_curve(model, 0, linspace(0, 1, 5), {0.0, 0.0}),
               std::invalid_argument);
  const DgpSpec spec = make_spec(Scenario::S3, 8, 0.5, 2);
  const MlpParams obs_model = MlpParams::zeros(MlpArch{spec.observed_dim(), {}});
  const int dropped_j = spec.dropped.front();
  EXPECT_THROW(prob_curve(obs_model, dropped_j, linspace(0, 1, 5),
                          std::vector<double>(8, 0.0), &spec),
               std::out_of_range);
}

TEST(Derivative, LinearClosedForm) {
  const MlpParams model = linear_model({0.7, -1.2}, 0.3);
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> x{rng.normal(), rng.normal()};
    const double s = predict_prob(model, x);
    EXPECT_NEAR(derivative(model, x, 0), s * (1 - s) * 0.7, 1e-6);
    EXPECT_NEAR(derivative(model, x, 1), s * (1 - s) * -1.2, 1e-6);
  }
}

TEST(Derivative, ConstantModelIsFlat) {
  const MlpParams model = linear_model({0.0, 0.0}, 0.4);
  EXPECT_DOUBLE_EQ(derivative(model, std::vector<double>{1.0, 2.0}, 0), 0.0);
}

TEST(Derivative, QuarterSlopeAtSymmetryPoint) {
  const MlpParams model = linear_model({0.9, -0.5}, 0.0);
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_NEAR(derivative(model, origin, 0), 0.9 / 4.0, 1e-6);
  EXPECT_NEAR(derivative(model, origin, 1), -0.5 / 4.0, 1e-6);
}

TEST(Elasticity, ClosedFormAndSingularity) {
  const MlpParams model = linear_model({0.7, -0.2}, 0.1);
  const std::vector<double> x{1.3, -0.8};
  const double s = predict_prob(model, x);
  EXPECT_NEAR(elasticity(model, x, 0), x[0] * 0.7 * (1 - s), 1e-5);

  const MlpParams flat = linear_model({0.0, 0.0}, 0.2);
  EXPECT_DOUBLE_EQ(elasticity(flat, x, 0), 0.0);

  const std::vector<double> at_zero{0.0, 1.0};
  EXPECT_THROW(elasticity(model, at_zero, 0), std::domain_error);
}

TEST(Vtts, RatioOfDerivatives) {
  const MlpParams model = linear_model({1.5, -0.6}, 0.2);
  Rng rng(7);
  const std::vector<double> x{rng.normal(), rng.normal()};
  EXPECT_NEAR(vtts(model, x, 0, 1), 1.5 / -0.6, 1e-5);
  EXPECT_NEAR(vtts(model, x, 0, 0), 1.0, 1e-12);

  const MlpParams flat = linear_model({1.0, 0.0}, 0.0);
  EXPECT_THROW(vtts(flat, x, 0, 1), std::domain_error);
}

TEST(UtilityDifference, MatchesRawLogit) {
  const MlpParams model = linear_model({0.4, 0.6}, -0.1);
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x{rng.normal(), rng.normal()};
    Matrix xm(1, 2, {x[0], x[1]});
    const double raw = forward(model, xm).logits[0];
    EXPECT_NEAR(utility_difference(model, x), raw, 1e-9);
  }
  const MlpParams half = MlpParams::zeros(MlpArch{2, {}});
  EXPECT_DOUBLE_EQ(utility_difference(half, std::vector<double>{1.0, 1.0}), 0.0);

  const MlpParams two = linear_model({0.0, 0.0}, 2.0);
  EXPECT_NEAR(utility_difference(two, std::vector<double>{0.0, 0.0}), 2.0, 1e-9);

  const MlpParams sat = linear_model({0.0, 0.0}, 50.0);
  EXPECT_THROW(utility_difference(sat, std::vector<double>{0.0, 0.0}),
               std::domain_error);
}

TEST(MarketShare, AveragesFittedProbabilities) {
  const MlpParams constant = linear_model({0.0}, std::log(0.3 / 0.7));
  Dataset ds;
  ds.X = Matrix(5, 1);
  ds.y.assign(5, 0);
  EXPECT_NEAR(market_share(constant, ds), 0.3, 1e-12);

  Dataset one;
  one.X = Matrix(1, 1, {0.42});
  one.y = {1};
  const MlpParams model = linear_model({0.9}, 0.0);
  EXPECT_DOUBLE_EQ(market_share(model, one),
                   predict_prob(model, std::vector<double>{0.42}));
}

TEST(MarketShare, EmbeddedTruthTracksLabelFrequency) {
  const DgpSpec spec = make_spec(Scenario::S1, 8, 0.75, 13);
  std::vector<double> w(spec.w_true.begin(), spec.w_true.end());
  const MlpParams truth = embed_linear_as_mlp(w, 0.0, MlpArch{8, {16}});
  Rng rng(21);
  const Dataset ds = sample_dataset(spec, 20000, rng);
  double y_mean = 0.0;
  for (int y : ds.y) y_mean += y;
  y_mean /= static_cast<double>(ds.n());
  EXPECT_NEAR(market_share(truth, ds), y_mean,
              5.0 * std::sqrt(0.25 / static_cast<double>(ds.n())));
}

TEST(CurveDerivativeConsistency, NumericalSlopeMatches) {
  MlpArch arch{3, {10, 10}};
  Rng rng(31);
  const MlpParams model = init_he(arch, rng);
  const std::vector<double> baseline{0.1, -0.2, 0.4};
  const ProbCurve curve = prob_curve(model, 1, linspace(-1, 1, 201), baseline);
  for (int i : {40, 100, 160}) {
    const double h = curve.grid[i + 1] - curve.grid[i - 1];
    const double slope = (curve.probs[i + 1] - curve.probs[i - 1]) / h;
    std::vector<double> x = baseline;
    x[1] = curve.grid[i];
    const double d = derivative(model, x, 1);
    if (std::abs(d) > 1e-4) {
      EXPECT_NEAR(slope, d, 1e-3 * std::abs(d) + 1e-6);
    }
  }
}
