#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nli/rng.hpp"

namespace nli {

using Vec = std::vector<double>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }

  bool operator==(const Matrix&) const = default;
};

/// K slices of N x N, slice-major then row-major.
struct BilinearTensor {
  std::size_t slices = 0, n = 0;
  std::vector<double> data;

  BilinearTensor() = default;
  BilinearTensor(std::size_t k, std::size_t dim) : slices(k), n(dim), data(k * dim * dim, 0.0) {}

  double& operator()(std::size_t k, std::size_t i, std::size_t j) { return data[(k * n + i) * n + j]; }
  double operator()(std::size_t k, std::size_t i, std::size_t j) const { return data[(k * n + i) * n + j]; }
  const double* slice(std::size_t k) const { return data.data() + k * n * n; }
  double* slice(std::size_t k) { return data.data() + k * n * n; }

  bool operator==(const BilinearTensor&) const = default;
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("dimension mismatch: ") + what);
}
}  // namespace detail

/// out_k = xl^T T_k xr
inline Vec bilinear(const BilinearTensor& t, const Vec& xl, const Vec& xr) {
  detail::require(xl.size() == t.n && xr.size() == t.n, "bilinear");
  Vec out(t.slices, 0.0);
  const std::size_t n = t.n;
  for (std::size_t k = 0; k < t.slices; ++k) {
    const double* s = t.slice(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* r = s + i * n;
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) inner += r[j] * xr[j];
      acc += xl[i] * inner;
    }
    out[k] = acc;
  }
  return out;
}

/// M [xl; xr] + bias
inline Vec affine(const Matrix& m, const Vec& xl, const Vec& xr, const Vec& bias) {
  detail::require(m.cols == xl.size() + xr.size() && bias.size() == m.rows, "affine");
  Vec out(bias);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < xl.size(); ++j) acc += r[j] * xl[j];
    for (std::size_t j = 0; j < xr.size(); ++j) acc += r[xl.size() + j] * xr[j];
    out[i] += acc;
  }
  return out;
}

/// Accumulates gradients of bilinear() given upstream gradient g.
inline void bilinear_backward(const BilinearTensor& t, const Vec& xl, const Vec& xr, const Vec& g,
                              BilinearTensor& dt, Vec& dxl, Vec& dxr) {
  const std::size_t n = t.n;
  for (std::size_t k = 0; k < t.slices; ++k) {
    const double gk = g[k];
    if (gk == 0.0) continue;
    const double* s = t.slice(k);
    double* ds = dt.slice(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double* r = s + i * n;
      double* dr = ds + i * n;
      const double gxl = gk * xl[i];
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        inner += r[j] * xr[j];
        dr[j] += gxl * xr[j];
        dxr[j] += gxl * r[j];
      }
      dxl[i] += gk * inner;
    }
  }
}

/// Accumulates gradients of affine() given upstream gradient g.
inline void affine_backward(const Matrix& m, const Vec& xl, const Vec& xr, const Vec& g, Matrix& dm, Vec& dxl,
                            Vec& dxr, Vec& dbias) {
  const std::size_t nl = xl.size();
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double gi = g[i];
    dbias[i] += gi;
    if (gi == 0.0) continue;
    const double* r = m.row(i);
    double* dr = dm.row(i);
    for (std::size_t j = 0; j < nl; ++j) {
      dr[j] += gi * xl[j];
      dxl[j] += gi * r[j];
    }
    for (std::size_t j = 0; j < xr.size(); ++j) {
      dr[nl + j] += gi * xr[j];
      dxr[j] += gi * r[nl + j];
    }
  }
}

inline Vec tanh_vec(Vec x) {
  for (double& v : x) v = std::tanh(v);
  return x;
}

inline constexpr double kLeakySlope = 0.01;

inline double leaky_relu(double x) { return std::max(x, 0.0) + kLeakySlope * std::min(x, 0.0); }

/// Derivative with the positive branch at 0.
inline double leaky_relu_grad(double x) { return x >= 0.0 ? 1.0 : kLeakySlope; }

inline Vec leaky_relu(Vec x) {
  for (double& v : x) v = leaky_relu(v);
  return x;
}

inline Vec softmax(const Vec& x) {
  if (x.empty()) return {};
  const double mx = *std::max_element(x.begin(), x.end());
  Vec out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline void init_uniform(std::vector<double>& data, Rng& rng, double lo = -0.1, double hi = 0.1) {
  for (double& v : data) v = rng.uniform(lo, hi);
}
inline void init_uniform(Matrix& m, Rng& rng, double lo = -0.1, double hi = 0.1) { init_uniform(m.data, rng, lo, hi); }
inline void init_uniform(BilinearTensor& t, Rng& rng, double lo = -0.1, double hi = 0.1) {
  init_uniform(t.data, rng, lo, hi);
}

}  // namespace nli
