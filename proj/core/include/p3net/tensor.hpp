#pragma once

#include <cstddef>
#include <vector>

#include "p3net/errors.hpp"

namespace p3net {

/// Dense row-major matrix.
template <typename T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> d;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), d(r * c, T(0)) {}

  T* row(std::size_t i) { return d.data() + i * cols; }
  const T* row(std::size_t i) const { return d.data() + i * cols; }
  T& at(std::size_t i, std::size_t j) { return d[i * cols + j]; }
  T at(std::size_t i, std::size_t j) const { return d[i * cols + j]; }
  void zero() { d.assign(d.size(), T(0)); }
};

/// y = x * w + 1 b^T.  x: (r x m), w: (m x n), b: n.
/// Every output element accumulates over k in increasing order, so a 1-row
/// call sees exactly the arithmetic of the batched call (bit-for-bit).
template <typename T>
void gemm_bias(const Mat<T>& x, const Mat<T>& w, const std::vector<T>& b, Mat<T>& y) {
  if (x.cols != w.rows || b.size() != w.cols) throw ShapeMismatch("gemm_bias: shape mismatch");
  y.rows = x.rows;
  y.cols = w.cols;
  y.d.assign(y.rows * y.cols, T(0));
  const std::size_t m = w.rows, n = w.cols;
#pragma omp parallel for schedule(static) if (x.rows > 4)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(x.rows); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    T* yr = y.row(i);
    for (std::size_t j = 0; j < n; ++j) yr[j] = b[j];
    const T* xr = x.row(i);
    for (std::size_t k = 0; k < m; ++k) {
      const T a = xr[k];
      const T* wr = w.row(k);
      for (std::size_t j = 0; j < n; ++j) yr[j] += a * wr[j];
    }
  }
}

/// dx = dy * w^T.  dy: (r x n), w: (m x n) -> dx: (r x m).
/// Works on a transposed copy of w so the inner loop accumulates into
/// independent dx elements (vectorizable without reassociation; the
/// per-element accumulation order over j stays fixed).
template <typename T>
void gemm_bt(const Mat<T>& dy, const Mat<T>& w, Mat<T>& dx) {
  if (dy.cols != w.cols) throw ShapeMismatch("gemm_bt: shape mismatch");
  const std::size_t m = w.rows, n = w.cols;
  std::vector<T> wt(m * n);
  for (std::size_t k = 0; k < m; ++k) {
    const T* wr = w.row(k);
    for (std::size_t j = 0; j < n; ++j) wt[j * m + k] = wr[j];
  }
  dx.rows = dy.rows;
  dx.cols = m;
  dx.d.assign(dx.rows * dx.cols, T(0));
#pragma omp parallel for schedule(static) if (dy.rows > 4)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(dy.rows); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T* dyr = dy.row(i);
    T* dxr = dx.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const T a = dyr[j];
      const T* wtr = wt.data() + j * m;
      for (std::size_t k = 0; k < m; ++k) dxr[k] += a * wtr[k];
    }
  }
}

/// dw += x^T * dy; db += column sums of dy.  x: (r x m), dy: (r x n).
/// Accumulation over rows i in increasing order per output element.
template <typename T>
void gemm_at_accum(const Mat<T>& x, const Mat<T>& dy, Mat<T>& dw, std::vector<T>& db) {
  if (x.rows != dy.rows || dw.rows != x.cols || dw.cols != dy.cols || db.size() != dy.cols)
    throw ShapeMismatch("gemm_at_accum: shape mismatch");
#pragma omp parallel for schedule(static) if (x.cols > 4)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(x.cols); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    T* dwr = dw.row(k);
    for (std::size_t i = 0; i < x.rows; ++i) {
      const T a = x.at(i, k);
      const T* dyr = dy.row(i);
      for (std::size_t j = 0; j < dy.cols; ++j) dwr[j] += a * dyr[j];
    }
  }
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const T* dyr = dy.row(i);
    for (std::size_t j = 0; j < dy.cols; ++j) db[j] += dyr[j];
  }
}

}  // namespace p3net
