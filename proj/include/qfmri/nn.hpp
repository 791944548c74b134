#pragma once

// Classical layers with explicit forward/backward passes. Everything operates
// on flat double vectors; 1D feature maps are stored channel-major, i.e.
// value(ch, t) = data[ch * length + t]. No padding anywhere.

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qfmri/errors.hpp"

namespace qfmri::nn {

inline int conv1d_output_length(int input_len, int kernel, int stride) {
  if (kernel < 1 || stride < 1)
    throw ShapeError("conv1d_output_length: kernel and stride must be >= 1");
  if (input_len < kernel)
    throw ShapeError("conv1d_output_length: input length " +
                     std::to_string(input_len) + " < kernel " +
                     std::to_string(kernel));
  return (input_len - kernel) / stride + 1;
}

struct Conv1dConfig {
  int in_channels;
  int out_channels;
  int kernel;
  int stride;

  int weight_count() const { return in_channels * out_channels * kernel; }
  int param_count() const { return weight_count() + out_channels; }
};

// weights layout: w[oc][ic][k] flattened; bias: b[oc].
inline std::vector<double> conv1d_forward(const Conv1dConfig& cfg,
                                          std::span<const double> weights,
                                          std::span<const double> bias,
                                          std::span<const double> x,
                                          int input_len) {
  if (static_cast<int>(x.size()) != cfg.in_channels * input_len)
    throw ShapeError("conv1d_forward: input size mismatch");
  if (static_cast<int>(weights.size()) != cfg.weight_count() ||
      static_cast<int>(bias.size()) != cfg.out_channels)
    throw ShapeError("conv1d_forward: parameter size mismatch");
  const int out_len = conv1d_output_length(input_len, cfg.kernel, cfg.stride);
  std::vector<double> y(static_cast<std::size_t>(cfg.out_channels) * out_len);
  for (int oc = 0; oc < cfg.out_channels; ++oc) {
    for (int t = 0; t < out_len; ++t) {
      double acc = bias[oc];
      const int start = t * cfg.stride;
      for (int ic = 0; ic < cfg.in_channels; ++ic) {
        const double* wrow =
            &weights[(oc * cfg.in_channels + ic) * cfg.kernel];
        const double* xrow = &x[ic * input_len + start];
        for (int k = 0; k < cfg.kernel; ++k) acc += wrow[k] * xrow[k];
      }
      y[oc * out_len + t] = acc;
    }
  }
  return y;
}

struct Conv1dGrads {
  std::vector<double> dx;
  std::vector<double> dw;
  std::vector<double> db;
};

inline Conv1dGrads conv1d_backward(const Conv1dConfig& cfg,
                                   std::span<const double> weights,
                                   std::span<const double> x, int input_len,
                                   std::span<const double> dy) {
  const int out_len = conv1d_output_length(input_len, cfg.kernel, cfg.stride);
  if (static_cast<int>(dy.size()) != cfg.out_channels * out_len)
    throw ShapeError("conv1d_backward: upstream size mismatch");
  Conv1dGrads g;
  g.dx.assign(x.size(), 0.0);
  g.dw.assign(weights.size(), 0.0);
  g.db.assign(cfg.out_channels, 0.0);
  for (int oc = 0; oc < cfg.out_channels; ++oc) {
    for (int t = 0; t < out_len; ++t) {
      const double d = dy[oc * out_len + t];
      g.db[oc] += d;
      const int start = t * cfg.stride;
      for (int ic = 0; ic < cfg.in_channels; ++ic) {
        double* dwrow = &g.dw[(oc * cfg.in_channels + ic) * cfg.kernel];
        double* dxrow = &g.dx[ic * input_len + start];
        const double* wrow =
            &weights[(oc * cfg.in_channels + ic) * cfg.kernel];
        const double* xrow = &x[ic * input_len + start];
        for (int k = 0; k < cfg.kernel; ++k) {
          dwrow[k] += d * xrow[k];
          dxrow[k] += d * wrow[k];
        }
      }
    }
  }
  return g;
}

struct DenseConfig {
  int in_dim;
  int out_dim;
  int param_count() const { return in_dim * out_dim + out_dim; }
};

// weights layout: w[out][in] flattened; bias: b[out].
inline std::vector<double> dense_forward(const DenseConfig& cfg,
                                         std::span<const double> weights,
                                         std::span<const double> bias,
                                         std::span<const double> x) {
  if (static_cast<int>(x.size()) != cfg.in_dim)
    throw ShapeError("dense_forward: input size mismatch");
  if (static_cast<int>(weights.size()) != cfg.in_dim * cfg.out_dim ||
      static_cast<int>(bias.size()) != cfg.out_dim)
    throw ShapeError("dense_forward: parameter size mismatch");
  std::vector<double> y(cfg.out_dim);
  for (int o = 0; o < cfg.out_dim; ++o) {
    double acc = bias[o];
    const double* wrow = &weights[o * cfg.in_dim];
    for (int i = 0; i < cfg.in_dim; ++i) acc += wrow[i] * x[i];
    y[o] = acc;
  }
  return y;
}

struct DenseGrads {
  std::vector<double> dx;
  std::vector<double> dw;
  std::vector<double> db;
};

inline DenseGrads dense_backward(const DenseConfig& cfg,
                                 std::span<const double> weights,
                                 std::span<const double> x,
                                 std::span<const double> dy) {
  if (static_cast<int>(dy.size()) != cfg.out_dim)
    throw ShapeError("dense_backward: upstream size mismatch");
  DenseGrads g;
  g.dx.assign(cfg.in_dim, 0.0);
  g.dw.assign(weights.size(), 0.0);
  g.db.assign(cfg.out_dim, 0.0);
  for (int o = 0; o < cfg.out_dim; ++o) {
    const double d = dy[o];
    g.db[o] = d;
    const double* wrow = &weights[o * cfg.in_dim];
    double* dwrow = &g.dw[o * cfg.in_dim];
    for (int i = 0; i < cfg.in_dim; ++i) {
      dwrow[i] = d * x[i];
      g.dx[i] += d * wrow[i];
    }
  }
  return g;
}

inline std::vector<double> relu_forward(std::span<const double> x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

inline std::vector<double> relu_backward(std::span<const double> x,
                                         std::span<const double> dy) {
  if (x.size() != dy.size()) throw ShapeError("relu_backward: size mismatch");
  std::vector<double> dx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

// Inverted dropout: kept activations are scaled by 1/(1-rate) during
// training; evaluation mode is the identity. The mask is returned for the
// backward pass.
struct DropoutResult {
  std::vector<double> y;
  std::vector<double> mask;  // 0 or 1/(1-rate) per element
};

inline DropoutResult dropout_forward(std::span<const double> x, double rate,
                                     bool training, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ShapeError("dropout_forward: rate must be in [0,1)");
  DropoutResult r;
  r.y.resize(x.size());
  r.mask.assign(x.size(), 1.0);
  if (!training || rate == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) r.y[i] = x[i];
    return r;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.mask[i] = unif(rng) < rate ? 0.0 : keep_scale;
    r.y[i] = x[i] * r.mask[i];
  }
  return r;
}

inline std::vector<double> dropout_backward(std::span<const double> mask,
                                            std::span<const double> dy) {
  if (mask.size() != dy.size())
    throw ShapeError("dropout_backward: size mismatch");
  std::vector<double> dx(dy.size());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
  return dx;
}

struct XentResult {
  double loss;
  std::array<double, 2> dlogits;
  std::array<double, 2> probs;
};

// loss = -w[label] * log(softmax(logits)[label]); the log argument is clamped
// at 1e-12.
inline XentResult weighted_softmax_xent(std::array<double, 2> logits,
                                        int label,
                                        std::array<double, 2> class_weights) {
  if (label != 0 && label != 1)
    throw ShapeError("weighted_softmax_xent: label must be 0 or 1");
  if (!std::isfinite(logits[0]) || !std::isfinite(logits[1]))
    throw NumericsError("weighted_softmax_xent: non-finite logits");
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  XentResult r;
  r.probs = {e0 / z, e1 / z};
  const double w = class_weights[label];
  r.loss = -w * std::log(std::max(r.probs[label], 1e-12));
  r.dlogits = {w * (r.probs[0] - (label == 0 ? 1.0 : 0.0)),
               w * (r.probs[1] - (label == 1 ? 1.0 : 0.0))};
  return r;
}

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n, double learning_rate = 1e-4)
      : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::vector<double>& params,
                      std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: length mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

}  // namespace qfmri::nn
