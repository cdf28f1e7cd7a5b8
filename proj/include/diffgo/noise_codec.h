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

#ifndef DIFFGO_NOISE_CODEC_H_
#define DIFFGO_NOISE_CODEC_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "diffgo/numerics.h"

namespace diffgo {

// n Gaussian latents N_i = gaussian_stream(seeds[i], dim) spanning the
// quantized noise space. Immutable once built.
class SeedBasis {
 public:
  // Throws invalid-argument on an empty or duplicated seed list.
  static SeedBasis build(std::vector<std::uint64_t> seeds, std::size_t dim);

  std::size_t size() const { return seeds_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::span<const float> vector(std::size_t i) const {
    return std::span<const float>(vectors_).subspan(i * dim_, dim_);
  }

 private:
  std::vector<std::uint64_t> seeds_;
  std::size_t dim_ = 0;
  std::vector<float> vectors_;  // n x dim, row i is N_i
  std::uint64_t fingerprint_ = 0;
};

// FNV-1a 64 over u64 LE dim followed by each seed as u64 LE.
std::uint64_t basis_fingerprint(std::span<const std::uint64_t> seeds, std::size_t dim);

struct WeightEntry {
  std::uint32_t index = 0;
  float value = 0.0f;
  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

// Sparse coefficients over a basis of size n; indices strictly increasing,
// zeros are not stored.
struct WeightVector {
  std::uint32_t n = 0;
  std::vector<WeightEntry> entries;

  // Rounds each coefficient to 32 bits and drops exact zeros.
  static WeightVector from_dense(std::span<const double> dense);
  Vec to_dense() const;
  std::size_t nonzeros() const { return entries.size(); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

struct GdConfig {
  std::optional<double> lr;  // default 0.5 / lambda_max(G), 20 power iterations
  double tol = 1e-6;
  std::size_t max_iters = 5000;
};

// Normal-equation data for one basis, reusable across projections.
class Projector {
 public:
  explicit Projector(const SeedBasis& basis);

  // Closed-form least squares via Cholesky on the Gram matrix.
  // Throws degenerate-basis when the Gram matrix is singular.
  Vec solve_exact(std::span<const double> x) const;
  // Gradient descent from w = 0 on ||x - sum w_i N_i||^2. Throws
  // ConvergenceError carrying the last iterate.
  Vec solve_gd(std::span<const double> x, const GdConfig& cfg = {}) const;

  const SymMatrix& gram() const { return gram_; }
  double lambda_max_estimate() const { return lambda_max_; }
  // b_i = <N_i, x>
  Vec correlate(std::span<const double> x) const;
  const SeedBasis& basis() const { return *basis_; }

 private:
  const SeedBasis* basis_;
  SymMatrix gram_;
  double lambda_max_ = 0.0;
};

WeightVector project_exact(std::span<const double> x_t, const SeedBasis& basis);
WeightVector project_gd(std::span<const double> x_t, const SeedBasis& basis, const GdConfig& cfg = {});

// Keeps the k largest-magnitude entries; ties go to the lower index.
// Throws invalid-argument unless 1 <= k <= n.
WeightVector truncate_topk(const WeightVector& w, std::size_t k);

// x[d] = sum_i w_i * N_i[d], accumulated in double over ascending index and
// rounded once to float. Bit-exact for identical (w, seeds, dim).
std::vector<float> reconstruct(const WeightVector& w, const SeedBasis& basis);

}  // namespace diffgo

#endif  // DIFFGO_NOISE_CODEC_H_
