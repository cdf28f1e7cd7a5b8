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

#include "diffgo/noise_codec.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "diffgo/bytes.h"
#include "diffgo/error.h"

namespace diffgo {

std::uint64_t basis_fingerprint(std::span<const std::uint64_t> seeds, std::size_t dim) {
  ByteWriter w;
  w.u64(static_cast<std::uint64_t>(dim));
  for (std::uint64_t s : seeds) w.u64(s);
  return fnv1a64(w.bytes());
}

SeedBasis SeedBasis::build(std::vector<std::uint64_t> seeds, std::size_t dim) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "build_basis: empty seed list");
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "build_basis: dim must be positive");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw Error(ErrorCode::kInvalidArgument, "build_basis: duplicate seeds");

  SeedBasis b;
  b.dim_ = dim;
  b.vectors_.reserve(seeds.size() * dim);
  for (std::uint64_t s : seeds) {
    const std::vector<float> v = gaussian_stream(s, dim);
    b.vectors_.insert(b.vectors_.end(), v.begin(), v.end());
  }
  b.fingerprint_ = basis_fingerprint(seeds, dim);
  b.seeds_ = std::move(seeds);
  return b;
}

WeightVector WeightVector::from_dense(std::span<const double> dense) {
  WeightVector w;
  w.n = static_cast<std::uint32_t>(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const float v = static_cast<float>(dense[i]);
    if (v != 0.0f) w.entries.push_back({static_cast<std::uint32_t>(i), v});
  }
  return w;
}

Vec WeightVector::to_dense() const {
  Vec d(n, 0.0);
  for (const auto& e : entries) d[e.index] = e.value;
  return d;
}

Projector::Projector(const SeedBasis& basis) : basis_(&basis), gram_(basis.size()) {
  const std::size_t n = basis.size();
  const std::size_t dim = basis.dim();
  std::vector<double> rows(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = basis.vector(i);
    std::copy(v.begin(), v.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = &rows[i * dim];
    for (std::size_t j = i; j < n; ++j) {
      const double* b = &rows[j * dim];
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) acc += a[d] * b[d];
      gram_.set(i, j, acc);
    }
  }

  // Power iteration from the all-ones vector.
  Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (std::size_t it = 0; it < 20; ++it) {
    Vec gv = gram_.multiply(v);
    const double nrm = norm2(gv);
    if (nrm == 0.0) break;
    lambda = dot(v, gv);
    for (std::size_t i = 0; i < n; ++i) v[i] = gv[i] / nrm;
  }
  lambda_max_ = std::max(lambda, norm2(gram_.multiply(v)));
}

Vec Projector::correlate(std::span<const double> x) const {
  if (x.size() != basis_->dim())
    throw Error(ErrorCode::kInvalidArgument, "projection: latent dimension does not match basis");
  Vec b(basis_->size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto v = basis_->vector(i);
    double acc = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) acc += static_cast<double>(v[d]) * x[d];
    b[i] = acc;
  }
  return b;
}

Vec Projector::solve_exact(std::span<const double> x) const {
  const Vec b = correlate(x);
  try {
    return solve_spd(gram_, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSingularMatrix)
      throw Error(ErrorCode::kDegenerateBasis, "project_exact: basis vectors are linearly dependent");
    throw;
  }
}

Vec Projector::solve_gd(std::span<const double> x, const GdConfig& cfg) const {
  const Vec b = correlate(x);
  const std::size_t n = b.size();
  const double b_norm = norm2(b);
  const double lr = cfg.lr.value_or(0.5 / lambda_max_);

  Vec w(n, 0.0);
  double rel = 0.0;
  for (std::size_t it = 0; it <= cfg.max_iters; ++it) {
    Vec grad = gram_.multiply(w);
    for (std::size_t i = 0; i < n; ++i) grad[i] -= b[i];
    const double r = norm2(grad);
    rel = b_norm > 0.0 ? r / b_norm : 0.0;
    if (r <= cfg.tol * b_norm) return w;
    if (it == cfg.max_iters) break;
    for (std::size_t i = 0; i < n; ++i) w[i] -= lr * 2.0 * grad[i];
  }
  throw ConvergenceError("project_gd: no convergence within max_iters", std::move(w), rel);
}

WeightVector project_exact(std::span<const double> x_t, const SeedBasis& basis) {
  return WeightVector::from_dense(Projector(basis).solve_exact(x_t));
}

WeightVector project_gd(std::span<const double> x_t, const SeedBasis& basis, const GdConfig& cfg) {
  return WeightVector::from_dense(Projector(basis).solve_gd(x_t, cfg));
}

WeightVector truncate_topk(const WeightVector& w, std::size_t k) {
  if (k < 1 || k > w.n) throw Error(ErrorCode::kInvalidArgument, "truncate_topk: k must be in [1, n]");
  WeightVector out{w.n, w.entries};
  if (out.entries.size() <= k) return out;
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const WeightEntry& a, const WeightEntry& b) {
    const float ma = std::abs(a.value);
    const float mb = std::abs(b.value);
    if (ma != mb) return ma > mb;
    return a.index < b.index;
  });
  out.entries.resize(k);
  std::sort(out.entries.begin(), out.entries.end(),
            [](const WeightEntry& a, const WeightEntry& b) { return a.index < b.index; });
  return out;
}

std::vector<float> reconstruct(const WeightVector& w, const SeedBasis& basis) {
  if (w.n != basis.size())
    throw Error(ErrorCode::kInvalidArgument, "reconstruct: weight vector size does not match basis");
  const std::size_t dim = basis.dim();
  Vec acc(dim, 0.0);
  for (const auto& e : w.entries) {
    if (e.index >= w.n) throw Error(ErrorCode::kInvalidArgument, "reconstruct: index out of range");
    auto v = basis.vector(e.index);
    const double wi = e.value;
    for (std::size_t d = 0; d < dim; ++d) acc[d] += wi * static_cast<double>(v[d]);
  }
  std::vector<float> out(dim);
  for (std::size_t d = 0; d < dim; ++d) out[d] = static_cast<float>(acc[d]);
  return out;
}

}  // namespace diffgo
