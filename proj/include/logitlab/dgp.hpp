#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "logitlab/matrix.hpp"
#include "logitlab/numerics.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

/// The three simulated ground truths: linear score, quadratic score, and
/// quadratic-plus-interactions score with variables hidden from the modeler.
enum class Scenario { S1, S2, S3 };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
  }
  throw std::invalid_argument("unknown scenario");
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "S1" || s == "s1") return Scenario::S1;
  if (s == "S2" || s == "s2") return Scenario::S2;
  if (s == "S3" || s == "s3") return Scenario::S3;
  throw std::invalid_argument("unsupported scenario: " + s);
}

/// A fully seeded true data-generating process. Covariates are mean-zero,
/// identity-covariance Gaussian; the true score is <w_true, transform(x)>.
struct DgpSpec {
  Scenario scenario = Scenario::S1;
  int d = 0;                     // raw input dimension
  std::vector<double> w_true;    // over transformed features
  std::vector<int> dropped;      // input indices hidden from the modeler (S3)
  double weight_scale = 1.0;
  std::uint64_t seed = 0;

  int transformed_dim() const {
    switch (scenario) {
      case Scenario::S1: return d;
      case Scenario::S2: return 2 * d;
      case Scenario::S3: return 1 + 2 * d + d * (d - 1) / 2;
    }
    throw std::invalid_argument("unknown scenario");
  }

  int observed_dim() const { return d - static_cast<int>(dropped.size()); }

  /// Raw input indices visible to the modeler, ascending.
  std::vector<int> observed_indices() const {
    std::vector<int> keep;
    keep.reserve(observed_dim());
    for (int j = 0; j < d; ++j) {
      if (!std::binary_search(dropped.begin(), dropped.end(), j)) {
        keep.push_back(j);
      }
    }
    return keep;
  }

  /// Project a full input onto the observed coordinates.
  std::vector<double> observe(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != d) {
      throw std::invalid_argument("observe: input length != d");
    }
    if (dropped.empty()) return {x.begin(), x.end()};
    std::vector<double> out;
    out.reserve(observed_dim());
    for (int j : observed_indices()) out.push_back(x[j]);
    return out;
  }
};

inline int dropped_count_for(int d) {
  if (d == 20) return 5;
  if (d == 50) return 20;
  return static_cast<int>(std::lround(d / 4.0));
}

inline DgpSpec make_spec(Scenario scenario, int d, double weight_scale,
                         std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("make_spec: d must be >= 2");
  if (!(weight_scale > 0.0)) {
    throw std::invalid_argument("make_spec: weight_scale must be positive");
  }
  DgpSpec spec;
  spec.scenario = scenario;
  spec.d = d;
  spec.weight_scale = weight_scale;
  spec.seed = seed;

  Rng rng(seed);
  Rng w_rng = rng.split(1);
  spec.w_true.resize(spec.transformed_dim());
  for (double& w : spec.w_true) {
    w = w_rng.rademacher() * weight_scale;
  }

  if (scenario == Scenario::S3) {
    const int n_drop = dropped_count_for(d);
    std::vector<int> all(d);
    for (int j = 0; j < d; ++j) all[j] = j;
    Rng drop_rng = rng.split(2);
    drop_rng.shuffle(all);
    spec.dropped.assign(all.begin(), all.begin() + n_drop);
    std::sort(spec.dropped.begin(), spec.dropped.end());
  }
  return spec;
}

/// Scenario feature maps, applied to the full (pre-drop) input.
/// S1: x. S2: [x, x^2]. S3: [1, x, x^2, x_j x_k for j<k].
inline std::vector<double> transform_features(const DgpSpec& spec,
                                              std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.d) {
    throw std::invalid_argument("transform_features: input length != d");
  }
  switch (spec.scenario) {
    case Scenario::S1:
      return {x.begin(), x.end()};
    case Scenario::S2: {
      std::vector<double> out;
      out.reserve(2 * spec.d);
      out.assign(x.begin(), x.end());
      for (double v : x) out.push_back(v * v);
      return out;
    }
    case Scenario::S3: {
      std::vector<double> out;
      out.reserve(spec.transformed_dim());
      out.push_back(1.0);
      out.insert(out.end(), x.begin(), x.end());
      for (double v : x) out.push_back(v * v);
      for (int j = 0; j < spec.d; ++j) {
        for (int k = j + 1; k < spec.d; ++k) {
          out.push_back(x[j] * x[k]);
        }
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown scenario");
}

/// True choice probability s*(x) = sigmoid(<w_true, transform(x)>),
/// evaluated on the full input (including any dropped coordinates).
/// The mathematical value is strictly inside (0,1); where the double
/// rounds onto a boundary the nearest interior value is returned instead.
inline double true_prob(const DgpSpec& spec, std::span<const double> x) {
  const std::vector<double> phi = transform_features(spec, x);
  double z = 0.0;
  for (std::size_t t = 0; t < phi.size(); ++t) {
    z += spec.w_true[t] * phi[t];
  }
  const double p = sigmoid(z);
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::min(hi, std::max(lo, p));
}

/// A labeled sample. X holds only the observed columns; p_true, when
/// present, was computed from the full input before dropping.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<double> p_true;       // empty for real data
  std::optional<DgpSpec> spec;

  std::size_t n() const { return X.rows(); }
};

inline Dataset sample_dataset(const DgpSpec& spec, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: N must be >= 1");
  Rng x_rng = rng.split(11);
  Rng y_rng = rng.split(12);
  const Matrix full = standard_normal_matrix(x_rng, n, spec.d);

  Dataset ds;
  ds.spec = spec;
  ds.y.resize(n);
  ds.p_true.resize(n);
  const auto keep = spec.observed_indices();
  ds.X = Matrix(n, keep.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double p = true_prob(spec, full.row_span(i));
    ds.p_true[i] = p;
    ds.y[i] = y_rng.bernoulli(p) ? 1 : 0;
    for (std::size_t c = 0; c < keep.size(); ++c) {
      ds.X(i, c) = full(i, static_cast<std::size_t>(keep[c]));
    }
  }
  return ds;
}

/// Monte-Carlo estimates of the irreducible losses of a DGP:
/// E[min(s*, 1-s*)] for 0/1 prediction and E[s*(1-s*)] for MSE.
struct BayesLosses {
  double min_prediction_loss = 0.0;
  double prediction_se = 0.0;
  double irreducible_mse = 0.0;
  double mse_se = 0.0;
};

inline BayesLosses bayes_optimal_losses(const DgpSpec& spec, std::size_t m,
                                        Rng& rng) {
  if (m < 10000) {
    throw std::invalid_argument("bayes_optimal_losses: M must be >= 10^4");
  }
  double sum_a = 0.0, sum_a2 = 0.0, sum_b = 0.0, sum_b2 = 0.0;
  std::vector<double> x(spec.d);
  for (std::size_t i = 0; i < m; ++i) {
    for (double& v : x) v = rng.normal();
    const double p = true_prob(spec, x);
    const double a = std::min(p, 1.0 - p);
    const double b = p * (1.0 - p);
    sum_a += a;
    sum_a2 += a * a;
    sum_b += b;
    sum_b2 += b * b;
  }
  const double dm = static_cast<double>(m);
  BayesLosses out;
  out.min_prediction_loss = sum_a / dm;
  out.irreducible_mse = sum_b / dm;
  const double var_a = std::max(0.0, sum_a2 / dm - out.min_prediction_loss * out.min_prediction_loss);
  const double var_b = std::max(0.0, sum_b2 / dm - out.irreducible_mse * out.irreducible_mse);
  out.prediction_se = std::sqrt(var_a / dm);
  out.mse_se = std::sqrt(var_b / dm);
  return out;
}

}  // namespace logitlab
