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

#ifndef DIFFGO_NUMERICS_H_
#define DIFFGO_NUMERICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace diffgo {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

struct RngState {
  std::uint64_t state = 0;
  friend bool operator==(const RngState&, const RngState&) = default;
};

struct SplitMixDraw {
  std::uint64_t value;
  RngState next;
};

// One SplitMix64 step: advance the counter by the golden gamma and finalize.
SplitMixDraw splitmix64_next(RngState state);

// Maps a raw 64-bit draw to a double in (0, 1].
inline double unit_interval(std::uint64_t raw) {
  return static_cast<double>((raw >> 11) + 1) * 0x1.0p-53;
}

// Stateful convenience wrapper around splitmix64_next.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_{seed} {}

  std::uint64_t next() {
    const SplitMixDraw d = splitmix64_next(state_);
    state_ = d.next;
    return d.value;
  }
  double uniform() { return unit_interval(next()); }
  // Integer in [0, bound). Modulo bias is irrelevant for the small bounds used here.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  RngState state() const { return state_; }

 private:
  RngState state_;
};

// Box-Muller standard normals from a SplitMix64 stream seeded with `seed`.
// Pure function of (seed, count); each pair of raw draws yields (z0, z1), and
// a trailing z1 is dropped for odd counts. Throws invalid-argument on count 0.
std::vector<float> gaussian_stream(std::uint64_t seed, std::size_t count);

// Mixes a seed with a stream tag so derived streams do not overlap.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// ---------------------------------------------------------------------------
// Small dense linear algebra
// ---------------------------------------------------------------------------

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Symmetric matrix; writes go to both triangles so entries(i,j) == entries(j,i)
// holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  static SymMatrix identity(std::size_t dim);
  // Symmetrizes (A + A^T) / 2; exact copy when `m` is already symmetric.
  static SymMatrix from_matrix(const Matrix& m);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * dim_ + j] = v;
    data_[j * dim_ + i] = v;
  }

  double frobenius_norm() const;
  Vec multiply(std::span<const double> x) const;
  Matrix to_matrix() const;

 private:
  std::size_t dim_ = 0;
  Vec data_;
};

// Solves G w = b for symmetric positive definite G by Cholesky factorization.
// Throws singular-matrix on a non-positive pivot.
Vec solve_spd(const SymMatrix& g, std::span<const double> b);

struct EigenDecomposition {
  Vec values;
  Matrix vectors;  // column k is the eigenvector for values[k]
};

// Cyclic Jacobi eigensolver; sweeps until the largest off-diagonal magnitude
// drops to 1e-12 * ||A||_F or 100 sweeps have run.
EigenDecomposition symmetric_eig(const SymMatrix& a);

// Principal square root of a PSD matrix. Eigenvalues down to -1e-10 * ||A||_F
// are clamped to zero; anything lower throws not-psd.
SymMatrix sqrtm_psd(const SymMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace diffgo

#endif  // DIFFGO_NUMERICS_H_
