#pragma once

// Shared test-only oracles. Everything here recomputes expected values by
// an independent route (closed forms, Newton solves, exact enumeration)
// and must not call into the implementation paths under test.

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <logitlab/matrix.hpp>
#include <logitlab/model.hpp>

namespace testsupport {

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// ---- flatten/unflatten for finite-difference gradient checks ----

inline std::vector<double> flatten(const logitlab::MlpParams& p) {
  std::vector<double> out;
  for (int j = 0; j < p.depth(); ++j) {
    out.insert(out.end(), p.weights[j].data().begin(), p.weights[j].data().end());
    out.insert(out.end(), p.biases[j].begin(), p.biases[j].end());
  }
  return out;
}

inline void unflatten(std::span<const double> flat, logitlab::MlpParams& p) {
  std::size_t k = 0;
  for (int j = 0; j < p.depth(); ++j) {
    for (double& v : p.weights[j].data()) v = flat[k++];
    for (double& v : p.biases[j]) v = flat[k++];
  }
  if (k != flat.size()) throw std::logic_error("unflatten: size mismatch");
}

/// Penalized log-loss evaluated through the forward pass only; the
/// independent objective for checking the reverse-mode gradients.
inline double penalized_loss(const logitlab::MlpParams& p, const logitlab::Matrix& x,
                             std::span<const int> y, double l1, double l2) {
  const auto fwd = logitlab::forward(p, x);
  double loss = 0.0;
  constexpr double kClip = 1e-12;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double pr = std::min(1.0 - kClip, std::max(kClip, fwd.probs[i]));
    loss += y[i] ? -std::log(pr) : -std::log1p(-pr);
  }
  loss /= static_cast<double>(y.size());
  double abs_sum = 0.0, sq_sum = 0.0;
  for (int j = 0; j < p.depth(); ++j) {
    for (double v : p.weights[j].data()) {
      abs_sum += std::abs(v);
      sq_sum += v * v;
    }
    for (double v : p.biases[j]) {
      abs_sum += std::abs(v);
      sq_sum += v * v;
    }
  }
  return loss + l1 * abs_sum + 0.5 * l2 * sq_sum;
}

/// Central finite differences of an arbitrary scalar function of the
/// flattened parameter vector.
inline std::vector<double> central_differences(
    const std::function<double(std::span<const double>)>& f, std::vector<double> at,
    double h) {
  std::vector<double> grad(at.size());
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double keep = at[k];
    at[k] = keep + h;
    const double up = f(at);
    at[k] = keep - h;
    const double down = f(at);
    at[k] = keep;
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

// ---- independent logistic-regression solver (Newton / IRLS) ----

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    if (std::abs(a[col][col]) < 1e-12) throw std::runtime_error("singular system");
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

struct IrlsFit {
  std::vector<double> w;  // length d
  double b = 0.0;
};

/// Newton-Raphson maximum likelihood for the binary logit with optional
/// ridge term; the convex-solver cross-check for the Adam training loop.
inline IrlsFit irls_logistic(const logitlab::Matrix& x, std::span<const int> y,
                             double l2 = 0.0, int iters = 50) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> beta(d + 1, 0.0);  // [w..., b]
  for (int it = 0; it < iters; ++it) {
    std::vector<double> grad(d + 1, 0.0);
    std::vector<std::vector<double>> hess(d + 1, std::vector<double>(d + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double z = beta[d];
      for (std::size_t j = 0; j < d; ++j) z += beta[j] * x(i, j);
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double r = p - static_cast<double>(y[i]);
      const double wgt = std::max(p * (1.0 - p), 1e-10);
      for (std::size_t j = 0; j <= d; ++j) {
        const double xj = j < d ? x(i, j) : 1.0;
        grad[j] += r * xj;
        for (std::size_t k = 0; k <= d; ++k) {
          const double xk = k < d ? x(i, k) : 1.0;
          hess[j][k] += wgt * xj * xk;
        }
      }
    }
    for (std::size_t j = 0; j <= d; ++j) {
      grad[j] = grad[j] / static_cast<double>(n) + l2 * beta[j];
      hess[j][j] += l2 * static_cast<double>(n);
    }
    for (auto& row : hess) {
      for (double& v : row) v /= static_cast<double>(n);
    }
    const auto step = solve_linear(hess, grad);
    double max_step = 0.0;
    for (std::size_t j = 0; j <= d; ++j) {
      beta[j] -= step[j];
      max_step = std::max(max_step, std::abs(step[j]));
    }
    if (max_step < 1e-12) break;
  }
  IrlsFit fit;
  fit.w.assign(beta.begin(), beta.begin() + d);
  fit.b = beta[d];
  return fit;
}

/// Exact E|mean(eps)| for N iid Rademacher signs: the mean is (2K-N)/N
/// with K ~ Binomial(N, 1/2), enumerated through log factorials.
inline double exact_mean_abs_rademacher(int n) {
  std::vector<double> logfact(n + 1, 0.0);
  for (int k = 1; k <= n; ++k) logfact[k] = logfact[k - 1] + std::log(k);
  double e = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double logp =
        logfact[n] - logfact[k] - logfact[n - k] - n * std::log(2.0);
    e += std::exp(logp) * std::abs(2.0 * k - n) / n;
  }
  return e;
}

}  // namespace testsupport
