#pragma once

#include <cmath>
#include <stdexcept>

#include "logitlab/matrix.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

/// 1/(1+e^{-z}) with the overflow-safe branch for negative z.
inline double sigmoid(double z) {
  if (!std::isfinite(z)) {
    throw std::domain_error("sigmoid: non-finite input");
  }
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// ln(p/(1-p)). Inverse of sigmoid up to float saturation.
inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("logit: p must lie strictly inside (0,1)");
  }
  return std::log(p) - std::log1p(-p);
}

/// n x d matrix of independent standard normal draws.
inline Matrix standard_normal_matrix(Rng& rng, std::size_t n, std::size_t d) {
  if (n < 1 || d < 1) {
    throw std::invalid_argument("standard_normal_matrix: n and d must be >= 1");
  }
  Matrix out(n, d);
  for (double& v : out.data()) {
    v = rng.normal();
  }
  return out;
}

}  // namespace logitlab
