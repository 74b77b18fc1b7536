#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <logitlab/model.hpp>
#include <logitlab/numerics.hpp>

#include "test_support.hpp"

using namespace logitlab;

namespace {

Matrix random_inputs(Rng& rng, std::size_t n, std::size_t d) {
  return standard_normal_matrix(rng, n, d);
}

std::vector<int> random_labels(Rng& rng, std::size_t n) {
  std::vector<int> y(n);
  for (int& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
  return y;
}

}  // namespace

TEST(InitHe, VarianceMatchesScheme) {
  MlpArch arch{100, {1000}};
  Rng rng(3);
  const MlpParams p = init_he(arch, rng);
  ASSERT_EQ(p.weights[0].size(), 100000u);
  EXPECT_NEAR(testsupport::variance(p.weights[0].data()), 0.02, 0.001);  // 5%
  for (const auto& b : p.biases) {
    for (double v : b) EXPECT_EQ(v, 0.0);
  }
}

TEST(InitHe, DeterministicBySeed) {
  MlpArch arch{5, {8, 8}};
  Rng a(9), b(9);
  const MlpParams pa = init_he(arch, a);
  const MlpParams pb = init_he(arch, b);
  for (int j = 0; j < pa.depth(); ++j) {
    EXPECT_EQ(pa.weights[j].data(), pb.weights[j].data());
  }
}

TEST(Forward, ZeroParamsGiveHalf) {
  MlpArch arch{4, {6, 6}};
  const MlpParams p = MlpParams::zeros(arch);
  Rng rng(2);
  const auto fwd = forward(p, random_inputs(rng, 10, 4));
  for (double prob : fwd.probs) EXPECT_DOUBLE_EQ(prob, 0.5);
}

TEST(Forward, LinearModelIsExactDotProduct) {
  MlpArch arch{2, {}};
  MlpParams p = MlpParams::zeros(arch);
  p.weights[0](0, 0) = 1.0;
  p.weights[0](0, 1) = -1.0;
  Matrix x(1, 2, {2.0, 2.0});
  const auto fwd = forward(p, x);
  EXPECT_DOUBLE_EQ(fwd.logits[0], 0.0);
  EXPECT_DOUBLE_EQ(fwd.probs[0], 0.5);
}

TEST(Forward, ProbsInsideUnitInterval) {
  MlpArch arch{6, {20, 20}};
  Rng rng(5);
  const MlpParams p = init_he(arch, rng);
  const auto fwd = forward(p, random_inputs(rng, 1000, 6));
  for (double prob : fwd.probs) {
    EXPECT_GT(prob, 0.0);
    EXPECT_LT(prob, 1.0);
  }
}

TEST(Forward, ShapeMismatchThrows) {
  MlpArch arch{4, {}};
  const MlpParams p = MlpParams::zeros(arch);
  Rng rng(2);
  EXPECT_THROW(forward(p, random_inputs(rng, 3, 5)), std::invalid_argument);
}

TEST(Forward, DeterministicAndPure) {
  MlpArch arch{5, {16}};
  Rng rng(11);
  const MlpParams p = init_he(arch, rng);
  const Matrix x = random_inputs(rng, 40, 5);
  const auto a = forward(p, x);
  const auto b = forward(p, x);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.probs, b.probs);
}

TEST(Gradients, BiasGradientAtHalfWithZeroLabels) {
  MlpArch arch{3, {}};
  const MlpParams p = MlpParams::zeros(arch);  // probs all 0.5
  Rng rng(7);
  const Matrix x = random_inputs(rng, 50, 3);
  const std::vector<int> y(50, 0);
  const MlpParams g = gradients(p, x, y, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(g.biases[0][0], 0.5);
}

TEST(Gradients, MatchesCentralDifferences) {
  for (std::uint64_t seed : {1ull, 2ull}) {
    MlpArch arch{3, {4}};
    Rng rng(seed);
    const MlpParams p = init_he(arch, rng);
    const Matrix x = random_inputs(rng, 16, 3);
    const auto y = random_labels(rng, 16);
    const double l1 = 0.001, l2 = 0.01;

    const MlpParams analytic = gradients(p, x, y, l1, l2);
    MlpParams probe = p;
    auto loss_at = [&](std::span<const double> flat) {
      testsupport::unflatten(flat, probe);
      return testsupport::penalized_loss(probe, x, y, l1, l2);
    };
    const auto fd =
        testsupport::central_differences(loss_at, testsupport::flatten(p), 1e-5);
    const auto an = testsupport::flatten(analytic);
    ASSERT_EQ(fd.size(), an.size());
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double rel =
          std::abs(an[k] - fd[k]) / std::max({std::abs(an[k]), std::abs(fd[k]), 1e-8});
      EXPECT_LE(rel, 1e-4) << "coordinate " << k << " seed " << seed;
    }
  }
}

TEST(Gradients, PenaltyOnlyCaseIsExact) {
  // zero data gradient: single feature pinned at 0, balanced labels at b=0
  MlpArch arch{1, {}};
  MlpParams p = MlpParams::zeros(arch);
  p.weights[0](0, 0) = 3.0;
  Matrix x(2, 1, {0.0, 0.0});
  const std::vector<int> y{0, 1};
  const double l2 = 0.25;
  const MlpParams g = gradients(p, x, y, 0.0, l2);
  EXPECT_DOUBLE_EQ(g.weights[0](0, 0), l2 * 3.0);
  EXPECT_DOUBLE_EQ(g.biases[0][0], 0.0);

  const MlpParams g1 = gradients(p, x, y, 0.5, 0.0);
  EXPECT_DOUBLE_EQ(g1.weights[0](0, 0), 0.5);  // l1 * sign(3)
}

TEST(Gradients, LinearModelMatchesLogisticFormula) {
  MlpArch arch{4, {}};
  Rng rng(13);
  const MlpParams p = init_he(arch, rng);
  const Matrix x = random_inputs(rng, 32, 4);
  const auto y = random_labels(rng, 32);
  const double l2 = 0.01;
  const MlpParams g = gradients(p, x, y, 0.0, l2);

  const auto fwd = forward(p, x);
  for (std::size_t j = 0; j < 4; ++j) {
    double expect = 0.0;
    for (std::size_t i = 0; i < 32; ++i) {
      expect += (fwd.probs[i] - y[i]) * x(i, j);
    }
    expect = expect / 32.0 + l2 * p.weights[0](0, j);
    EXPECT_NEAR(g.weights[0](0, j), expect, 1e-12);
  }
}

TEST(Gradients, BadArgumentsThrow) {
  MlpArch arch{4, {}};
  const MlpParams p = MlpParams::zeros(arch);
  Rng rng(2);
  const Matrix x = random_inputs(rng, 3, 4);
  const std::vector<int> y{0, 1};
  EXPECT_THROW(gradients(p, x, y, 0.0, 0.0), std::invalid_argument);
  const std::vector<int> y3{0, 1, 0};
  EXPECT_THROW(gradients(p, x, y3, -1.0, 0.0), std::invalid_argument);
}

TEST(EmbedLinear, ReproducesLinearLogitsThroughDeepNet) {
  const std::vector<double> w{1.0, -1.0};
  MlpArch arch{2, {100, 100, 100, 100, 100}};
  const MlpParams deep = embed_linear_as_mlp(w, 0.0, arch);
  Rng rng(21);
  double max_diff = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Matrix xm(1, 2, {rng.normal(), rng.normal()});
    const double linear = w[0] * xm(0, 0) + w[1] * xm(0, 1);
    max_diff = std::max(max_diff, std::abs(forward(deep, xm).logits[0] - linear));
  }
  EXPECT_LE(max_diff, 1e-9);
}

TEST(EmbedLinear, HandCases) {
  MlpArch arch{1, {4, 4}};
  const MlpParams p = embed_linear_as_mlp(std::vector<double>{3.0}, 1.0, arch);
  Matrix x(1, 1, {-2.0});
  EXPECT_NEAR(forward(p, x).logits[0], -5.0, 1e-9);

  const MlpParams zero =
      embed_linear_as_mlp(std::vector<double>{0.0}, 0.0, MlpArch{1, {4}});
  EXPECT_DOUBLE_EQ(forward(zero, x).probs[0], 0.5);
}

TEST(EmbedLinear, WidthTooSmallThrows) {
  const std::vector<double> w3{1.0, 2.0, 3.0};
  EXPECT_THROW(embed_linear_as_mlp(w3, 0.0, MlpArch{3, {5}}), std::invalid_argument);
  const std::vector<double> w1{1.0};
  EXPECT_THROW(embed_linear_as_mlp(w1, 0.0, MlpArch{2, {4}}), std::invalid_argument);
}

TEST(LayerNorms, HandComputedValues) {
  MlpArch arch{2, {2}};
  MlpParams p = MlpParams::zeros(arch);
  p.weights[0](0, 0) = 1.0;
  p.weights[0](1, 1) = 1.0;  // identity
  const LayerNorms norms = layer_norms(p);
  EXPECT_DOUBLE_EQ(norms.frobenius[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(norms.one_inf[0], 1.0);
  EXPECT_DOUBLE_EQ(norms.frobenius[1], 0.0);
  EXPECT_DOUBLE_EQ(norms.one_inf[1], 0.0);
}

TEST(LayerNorms, HomogeneousInScaleAndIgnoresBiases) {
  MlpArch arch{3, {5}};
  Rng rng(4);
  MlpParams p = init_he(arch, rng);
  for (auto& b : p.biases) {
    for (double& v : b) v = 42.0;
  }
  const LayerNorms base = layer_norms(p);
  MlpParams scaled = p;
  const double c = -2.5;
  for (auto& w : scaled.weights) {
    for (double& v : w.data()) v *= c;
  }
  const LayerNorms after = layer_norms(scaled);
  for (int j = 0; j < p.depth(); ++j) {
    EXPECT_NEAR(after.frobenius[j], std::abs(c) * base.frobenius[j], 1e-12);
    EXPECT_NEAR(after.one_inf[j], std::abs(c) * base.one_inf[j], 1e-12);
  }
}

TEST(ParamIo, RoundTripIsBitExact) {
  MlpArch arch{4, {7, 3}};
  Rng rng(15);
  const MlpParams p = init_he(arch, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "logitlab_params_test.bin").string();
  save_params(p, path);
  const MlpParams q = load_params(path);
  ASSERT_TRUE(q.arch() == p.arch());
  for (int j = 0; j < p.depth(); ++j) {
    EXPECT_EQ(p.weights[j].data(), q.weights[j].data());
    EXPECT_EQ(p.biases[j], q.biases[j]);
  }
  std::remove(path.c_str());
}

TEST(ParamIo, RejectsGarbage) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "logitlab_params_bad.bin").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "not a model";
  }
  EXPECT_THROW(load_params(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST(MlpParams, ParamCountIncludesBiases) {
  MlpArch arch{3, {4}};
  const MlpParams p = MlpParams::zeros(arch);
  // 3*4 + 4 + 4*1 + 1
  EXPECT_EQ(p.param_count(), 21u);
  EXPECT_EQ(p.depth(), 2);
  EXPECT_TRUE(p.arch() == arch);
}
