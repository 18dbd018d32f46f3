#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "p3net/mt19937.hpp"
#include "p3net/tensor.hpp"

namespace p3net {

/// Fully-connected layer: y = x W + 1 b^T (W is in_dim x out_dim).
template <typename T>
struct Linear {
  Mat<T> w;
  std::vector<T> b;

  std::size_t in_dim() const { return w.rows; }
  std::size_t out_dim() const { return w.cols; }

  void forward(const Mat<T>& x, Mat<T>& y) const { gemm_bias(x, w, b, y); }
};

template <typename T>
Mat<T> fc_forward(const Linear<T>& layer, const Mat<T>& x) {
  Mat<T> y;
  layer.forward(x, y);
  return y;
}

/// 1D batch normalization over the row dimension. Inference uses the fused
/// per-channel scale s = gamma / sqrt(running_var + eps), cached so the
/// square root and division drop out of the hot path.
template <typename T>
struct BatchNorm {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T eps = static_cast<T>(1e-5);

  mutable std::vector<T> fused_scale;
  mutable bool cache_valid = false;

  explicit BatchNorm(std::size_t n = 0)
      : gamma(n, T(1)), beta(n, T(0)), running_mean(n, T(0)), running_var(n, T(1)) {}

  std::size_t channels() const { return gamma.size(); }

  void refresh_fused() const {
    fused_scale.resize(gamma.size());
    for (std::size_t c = 0; c < gamma.size(); ++c) {
      fused_scale[c] = gamma[c] / std::sqrt(running_var[c] + eps);
    }
    cache_valid = true;
  }
  void invalidate() const { cache_valid = false; }
};

/// Fused BN + ReLU inference: y = max(0, (x - running_mean) .* s + beta).
/// Requires a valid fused-scale cache.
template <typename T>
void bn_relu_infer(const BatchNorm<T>& layer, const Mat<T>& x, Mat<T>& y) {
  if (!layer.cache_valid) throw InvalidCache("bn_relu_infer: fused scale cache is stale");
  if (x.cols != layer.channels()) throw ShapeMismatch("bn_relu_infer: channel mismatch");
  y.rows = x.rows;
  y.cols = x.cols;
  y.d.resize(x.d.size());
  const T* mu = layer.running_mean.data();
  const T* s = layer.fused_scale.data();
  const T* beta = layer.beta.data();
  for (std::size_t i = 0; i < x.rows; ++i) {
    const T* xr = x.row(i);
    T* yr = y.row(i);
    for (std::size_t c = 0; c < x.cols; ++c) {
      const T v = (xr[c] - mu[c]) * s[c] + beta[c];
      yr[c] = v > T(0) ? v : T(0);
    }
  }
}

constexpr std::uint32_t dropout_threshold(double p) {
  return static_cast<std::uint32_t>(static_cast<std::uint64_t>(4294967296.0 * p));
}

/// Inverted-dropout survivor scale, exact for p = 0.5.
template <typename T>
constexpr T dropout_scale(double p) {
  return static_cast<T>(1.0 / (1.0 - p));
}

/// Fused ReLU + dropout, active in training and in MC inference alike: an
/// element survives iff it is non-negative and its random word r satisfies
/// r >= floor(2^32 p); survivors are scaled by 1/(1-p) so the expectation
/// matches the dropout-free evaluation path. One word is consumed per
/// element in row-major order. The mask (1 = survived) feeds the backward
/// pass.
template <typename T>
void dropout_relu(const Mat<T>& x, Mat<T>& y, WordSource& rng,
                  std::vector<std::uint8_t>* mask, double p = 0.5) {
  const std::uint32_t threshold = dropout_threshold(p);
  const T scale = dropout_scale<T>(p);
  y.rows = x.rows;
  y.cols = x.cols;
  y.d.resize(x.d.size());
  if (mask) mask->resize(x.d.size());
  for (std::size_t i = 0; i < x.d.size(); ++i) {
    const std::uint32_t r = rng.next_u32();
    const bool keep = x.d[i] >= T(0) && r >= threshold;
    y.d[i] = keep ? x.d[i] * scale : T(0);
    if (mask) (*mask)[i] = keep ? 1 : 0;
  }
}

/// Plain ReLU (dropout flag off).
template <typename T>
void relu(const Mat<T>& x, Mat<T>& y) {
  y.rows = x.rows;
  y.cols = x.cols;
  y.d.resize(x.d.size());
  for (std::size_t i = 0; i < x.d.size(); ++i) y.d[i] = x.d[i] > T(0) ? x.d[i] : T(0);
}

}  // namespace p3net
