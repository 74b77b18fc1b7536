#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "logitlab/matrix.hpp"
#include "logitlab/numerics.hpp"
#include "logitlab/rng.hpp"

namespace logitlab {

/// Feedforward architecture: ReLU hidden layers, one sigmoid output logit.
/// An empty hidden list is exactly the binary logit model (linear score).
struct MlpArch {
  int input_dim = 0;
  std::vector<int> hidden;

  /// Number of weight matrices; 1 for the linear model.
  int depth() const { return static_cast<int>(hidden.size()) + 1; }

  std::vector<int> layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    return dims;
  }

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("MlpArch: input_dim must be >= 1");
    for (int w : hidden) {
      if (w < 1) throw std::invalid_argument("MlpArch: hidden widths must be >= 1");
    }
  }
};

inline bool operator==(const MlpArch& a, const MlpArch& b) {
  return a.input_dim == b.input_dim && a.hidden == b.hidden;
}

/// All coefficients of one network. weights[j] has shape (out x in);
/// biases[j] has length out.
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  int depth() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return static_cast<int>(weights.front().cols()); }

  MlpArch arch() const {
    MlpArch a;
    a.input_dim = input_dim();
    for (std::size_t j = 0; j + 1 < weights.size(); ++j) {
      a.hidden.push_back(static_cast<int>(weights[j].rows()));
    }
    return a;
  }

  /// Total coefficient count, weights plus biases.
  std::size_t param_count() const {
    std::size_t t = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      t += weights[j].size() + biases[j].size();
    }
    return t;
  }

  static MlpParams zeros(const MlpArch& arch) {
    arch.validate();
    const auto dims = arch.layer_dims();
    MlpParams p;
    for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
      p.weights.emplace_back(dims[j + 1], dims[j]);
      p.biases.emplace_back(dims[j + 1], 0.0);
    }
    return p;
  }
};

/// He initialization: weight entries ~ N(0, 2/fan_in), biases zero.
inline MlpParams init_he(const MlpArch& arch, Rng& rng) {
  MlpParams p = MlpParams::zeros(arch);
  for (auto& w : p.weights) {
    const double sd = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (double& v : w.data()) v = sd * rng.normal();
  }
  return p;
}

struct Forward {
  std::vector<double> logits;
  std::vector<double> probs;
};

namespace detail {

/// Runs the network over a batch, keeping layer inputs when a backward
/// pass will follow. activations[j] is the input of layer j; for j >= 1
/// that is the post-ReLU output of layer j-1, which also encodes the
/// ReLU mask (positive iff the pre-activation was).
struct ForwardTrace {
  std::vector<Matrix> activations;
  std::vector<double> logits;
  std::vector<double> probs;
};

inline Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  Matrix z = matmul(x, transpose(w));
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double* row = z.row(i);
    for (std::size_t j = 0; j < z.cols(); ++j) row[j] += b[j];
  }
  return z;
}

inline ForwardTrace run_forward(const MlpParams& params, const Matrix& x, bool keep_trace) {
  if (static_cast<int>(x.cols()) != params.input_dim()) {
    throw std::invalid_argument("forward: X columns do not match model input dim");
  }
  ForwardTrace tr;
  const int depth = params.depth();
  Matrix h = x;
  if (keep_trace) tr.activations.push_back(h);
  for (int j = 0; j < depth; ++j) {
    Matrix z = affine(h, params.weights[j], params.biases[j]);
    if (j + 1 < depth) {
      for (double& v : z.data()) v = v > 0.0 ? v : 0.0;  // ReLU, 0 at the kink
      h = std::move(z);
      if (keep_trace) tr.activations.push_back(h);
    } else {
      tr.logits.resize(z.rows());
      tr.probs.resize(z.rows());
      for (std::size_t i = 0; i < z.rows(); ++i) {
        tr.logits[i] = z(i, 0);
        tr.probs[i] = sigmoid(z(i, 0));
      }
    }
  }
  return tr;
}

/// Reverse pass from d(objective)/d(logit) stored in delta (n x 1).
/// Returns parameter gradients; no penalty terms.
inline MlpParams backprop_from_delta(const MlpParams& params, const ForwardTrace& tr,
                                     Matrix delta) {
  MlpParams grad = MlpParams::zeros(params.arch());
  for (int j = params.depth() - 1; j >= 0; --j) {
    const Matrix& input = tr.activations[j];
    grad.weights[j] = matmul(transpose(delta), input);
    auto& db = grad.biases[j];
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const double* row = delta.row(i);
      for (std::size_t c = 0; c < delta.cols(); ++c) db[c] += row[c];
    }
    if (j > 0) {
      Matrix next = matmul(delta, params.weights[j]);
      const Matrix& act = tr.activations[j];  // post-ReLU: >0 iff pre-act was
      for (std::size_t t = 0; t < next.data().size(); ++t) {
        if (!(act.data()[t] > 0.0)) next.data()[t] = 0.0;
      }
      delta = std::move(next);
    }
  }
  return grad;
}

}  // namespace detail

/// Batch evaluation: logits and choice probabilities for each row of X.
inline Forward forward(const MlpParams& params, const Matrix& x) {
  auto tr = detail::run_forward(params, x, false);
  return {std::move(tr.logits), std::move(tr.probs)};
}

inline double predict_prob(const MlpParams& params, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data().begin());
  return forward(params, m).probs[0];
}

/// Gradient of the penalized mean log-loss
///   (1/N) sum_i logloss(y_i, s(x_i)) + l1 * sum|w| + (l2/2) * sum w^2
/// by reverse-mode differentiation. Returned structure is congruent to
/// params. ReLU subgradient at 0 is 0; sign(0) is 0 in the l1 term.
/// Also reports the penalized loss value since the forward pass is shared.
struct GradResult {
  MlpParams grad;
  double data_loss = 0.0;
  double penalty = 0.0;
  double loss() const { return data_loss + penalty; }
};

inline GradResult gradients_with_loss(const MlpParams& params, const Matrix& x,
                                      std::span<const int> y, double l1, double l2) {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("gradients: X rows != label count");
  }
  if (l1 < 0.0 || l2 < 0.0) {
    throw std::invalid_argument("gradients: penalties must be >= 0");
  }
  const std::size_t n = x.rows();
  const int depth = params.depth();
  auto tr = detail::run_forward(params, x, true);

  GradResult out;
  constexpr double kClip = 1e-12;
  double loss = 0.0;
  Matrix delta(n, 1);  // d(loss)/d(logit)
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::min(1.0 - kClip, std::max(kClip, tr.probs[i]));
    loss += y[i] ? -std::log(p) : -std::log1p(-p);
    delta(i, 0) = (tr.probs[i] - static_cast<double>(y[i])) / static_cast<double>(n);
  }
  out.data_loss = loss / static_cast<double>(n);
  out.grad = detail::backprop_from_delta(params, tr, std::move(delta));

  if (l1 > 0.0 || l2 > 0.0) {
    double abs_sum = 0.0, sq_sum = 0.0;
    for (int j = 0; j < depth; ++j) {
      auto& gw = out.grad.weights[j].data();
      const auto& w = params.weights[j].data();
      for (std::size_t t = 0; t < w.size(); ++t) {
        abs_sum += std::abs(w[t]);
        sq_sum += w[t] * w[t];
        gw[t] += l1 * (w[t] > 0.0 ? 1.0 : (w[t] < 0.0 ? -1.0 : 0.0)) + l2 * w[t];
      }
      auto& gb = out.grad.biases[j];
      const auto& b = params.biases[j];
      for (std::size_t t = 0; t < b.size(); ++t) {
        abs_sum += std::abs(b[t]);
        sq_sum += b[t] * b[t];
        gb[t] += l1 * (b[t] > 0.0 ? 1.0 : (b[t] < 0.0 ? -1.0 : 0.0)) + l2 * b[t];
      }
    }
    out.penalty = l1 * abs_sum + 0.5 * l2 * sq_sum;
  }
  return out;
}

inline MlpParams gradients(const MlpParams& params, const Matrix& x,
                           std::span<const int> y, double l1, double l2) {
  return gradients_with_loss(params, x, y, l1, l2).grad;
}

/// Realizes a linear score <w,x> + b inside a deep ReLU net, using the
/// paired split x = ReLU(x) - ReLU(-x) in the first hidden layer and
/// carrying the pair through every later hidden layer unchanged.
inline MlpParams embed_linear_as_mlp(std::span<const double> w, double b,
                                     const MlpArch& arch) {
  arch.validate();
  const int d = static_cast<int>(w.size());
  if (arch.input_dim != d) {
    throw std::invalid_argument("embed_linear_as_mlp: arch input_dim != len(w)");
  }
  for (int width : arch.hidden) {
    if (width < 2 * d) {
      throw std::invalid_argument(
          "embed_linear_as_mlp: every hidden width must be >= 2*len(w)");
    }
  }
  MlpParams p = MlpParams::zeros(arch);
  if (arch.hidden.empty()) {
    for (int j = 0; j < d; ++j) p.weights[0](0, j) = w[j];
    p.biases[0][0] = b;
    return p;
  }
  // first hidden layer: rows [0,d) carry ReLU(x), rows [d,2d) carry ReLU(-x)
  for (int j = 0; j < d; ++j) {
    p.weights[0](j, j) = 1.0;
    p.weights[0](d + j, j) = -1.0;
  }
  // interior layers: [I -I; -I I] on the first 2d coordinates
  for (std::size_t layer = 1; layer < p.weights.size() - 1; ++layer) {
    for (int j = 0; j < d; ++j) {
      p.weights[layer](j, j) = 1.0;
      p.weights[layer](j, d + j) = -1.0;
      p.weights[layer](d + j, j) = -1.0;
      p.weights[layer](d + j, d + j) = 1.0;
    }
  }
  // output: w on the positive half, -w on the negative half
  Matrix& out = p.weights.back();
  for (int j = 0; j < d; ++j) {
    out(0, j) = w[j];
    out(0, d + j) = -w[j];
  }
  p.biases.back()[0] = b;
  return p;
}

/// Per-layer weight-matrix norms used by the capacity bounds. Biases are
/// excluded. frobenius[j] = ||W_j||_F; one_inf[j] = max_row ||row||_1.
struct LayerNorms {
  std::vector<double> frobenius;
  std::vector<double> one_inf;
};

inline LayerNorms layer_norms(const MlpParams& params) {
  LayerNorms norms;
  for (const Matrix& w : params.weights) {
    double fro = 0.0, oneinf = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double row_l1 = 0.0;
      const double* row = w.row(i);
      for (std::size_t j = 0; j < w.cols(); ++j) {
        fro += row[j] * row[j];
        row_l1 += std::abs(row[j]);
      }
      oneinf = std::max(oneinf, row_l1);
    }
    norms.frobenius.push_back(std::sqrt(fro));
    norms.one_inf.push_back(oneinf);
  }
  return norms;
}

// ---- flat binary serialization: magic, arch header, then per-layer
// row-major weights followed by biases, all little-endian doubles ----

inline void save_params(const MlpParams& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_params: cannot open " + path);
  const char magic[8] = {'M', 'L', 'P', 'B', '0', '0', '0', '1'};
  f.write(magic, 8);
  const auto arch = params.arch();
  auto put_u64 = [&f](std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
  };
  put_u64(static_cast<std::uint64_t>(arch.input_dim));
  put_u64(arch.hidden.size());
  for (int h : arch.hidden) put_u64(static_cast<std::uint64_t>(h));
  for (int j = 0; j < params.depth(); ++j) {
    const auto& w = params.weights[j].data();
    f.write(reinterpret_cast<const char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(double)));
    const auto& b = params.biases[j];
    f.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("save_params: write failed for " + path);
}

inline MlpParams load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_params: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "MLPB0001", 8) != 0) {
    throw std::runtime_error("load_params: bad magic in " + path);
  }
  auto get_u64 = [&f]() {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  MlpArch arch;
  arch.input_dim = static_cast<int>(get_u64());
  const std::uint64_t n_hidden = get_u64();
  if (!f || n_hidden > 1024) throw std::runtime_error("load_params: corrupt header");
  for (std::uint64_t j = 0; j < n_hidden; ++j) {
    arch.hidden.push_back(static_cast<int>(get_u64()));
  }
  arch.validate();
  MlpParams p = MlpParams::zeros(arch);
  for (int j = 0; j < p.depth(); ++j) {
    auto& w = p.weights[j].data();
    f.read(reinterpret_cast<char*>(w.data()),
           static_cast<std::streamsize>(w.size() * sizeof(double)));
    auto& b = p.biases[j];
    f.read(reinterpret_cast<char*>(b.data()),
           static_cast<std::streamsize>(b.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("load_params: truncated file " + path);
  return p;
}

}  // namespace logitlab
