/* Copyright 2026 The diffgo Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "diffgo/numerics.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diffgo/error.h"

namespace diffgo {

SplitMixDraw splitmix64_next(RngState state) {
  const std::uint64_t s = state.state + 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return {z ^ (z >> 31), RngState{s}};
}

std::vector<float> gaussian_stream(std::uint64_t seed, std::size_t count) {
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "gaussian_stream: count must be >= 1");
  std::vector<float> out;
  out.reserve(count + 1);
  SplitMix64 rng(seed);
  while (out.size() < count) {
    const double u1 = unit_interval(rng.next());
    const double u2 = unit_interval(rng.next());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out.push_back(static_cast<float>(radius * std::cos(angle)));
    out.push_back(static_cast<float>(radius * std::sin(angle)));
  }
  out.resize(count);
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  // Two finalizer rounds over (seed, tag); distinct tags give unrelated streams.
  const SplitMixDraw a = splitmix64_next(RngState{seed ^ (tag * 0xD1B54A32D192ED03ULL)});
  return splitmix64_next(RngState{a.value + tag}).value;
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::from_matrix(const Matrix& m) {
  if (m.rows != m.cols) throw Error(ErrorCode::kInvalidArgument, "SymMatrix: matrix not square");
  SymMatrix s(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    s.set(i, i, m(i, i));
    for (std::size_t j = i + 1; j < m.cols; ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  }
  return s;
}

double SymMatrix::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

Vec SymMatrix::multiply(std::span<const double> x) const {
  if (x.size() != dim_) throw Error(ErrorCode::kInvalidArgument, "SymMatrix::multiply: size mismatch");
  Vec y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &data_[i * dim_];
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Matrix SymMatrix::to_matrix() const {
  Matrix m(dim_, dim_);
  m.data = data_;
  return m;
}

Vec solve_spd(const SymMatrix& g, std::span<const double> b) {
  const std::size_t n = g.dim();
  if (b.size() != n) throw Error(ErrorCode::kInvalidArgument, "solve_spd: size mismatch");

  // Lower-triangular factor L with G = L L^T.
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = g(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    // Relative pivot test: rank deficiency shows up as round-off sized pivots.
    if (!(diag > 1e-12 * g(j, j))) throw Error(ErrorCode::kSingularMatrix, "solve_spd: matrix is singular");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = g(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }

  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * y[k];
    y[i] = v / l(i, i);
  }
  Vec w(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double v = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= l(k, ii) * w[k];
    w[ii] = v / l(ii, ii);
  }
  return w;
}

EigenDecomposition symmetric_eig(const SymMatrix& sym) {
  const std::size_t n = sym.dim();
  Matrix a = sym.to_matrix();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double threshold = 1e-12 * sym.frobenius_norm();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= threshold) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  return out;
}

SymMatrix sqrtm_psd(const SymMatrix& a) {
  const std::size_t n = a.dim();
  const double norm = a.frobenius_norm();
  const EigenDecomposition eig = symmetric_eig(a);

  Vec root(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = eig.values[k];
    if (lambda < -1e-10 * norm) throw Error(ErrorCode::kNotPsd, "sqrtm_psd: negative eigenvalue");
    root[k] = std::sqrt(std::max(lambda, 0.0));
  }

  SymMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += eig.vectors(i, k) * root[k] * eig.vectors(j, k);
      s.set(i, j, acc);
    }
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace diffgo
