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

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "diffgo/error.h"

namespace diffgo {
namespace {

std::vector<std::uint64_t> iota_seeds(std::size_t n, std::uint64_t first = 1) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), first);
  return s;
}

Vec random_vec(std::uint64_t seed, std::size_t dim) {
  const auto z = gaussian_stream(seed, dim);
  return Vec(z.begin(), z.end());
}

Vec basis_vec(const SeedBasis& b, std::size_t i) {
  const auto v = b.vector(i);
  return Vec(v.begin(), v.end());
}

double residual_sq(std::span<const double> x, const Vec& w, const SeedBasis& b) {
  Vec r(x.begin(), x.end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto v = b.vector(i);
    for (std::size_t d = 0; d < r.size(); ++d) r[d] -= w[i] * v[d];
  }
  return dot(r, r);
}

TEST(SeedBasisTest, VectorsAreSeededStreams) {
  const SeedBasis b = SeedBasis::build({5, 9, 2}, 64);
  ASSERT_EQ(b.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ref = gaussian_stream(b.seeds()[i], 64);
    EXPECT_EQ(0, std::memcmp(ref.data(), b.vector(i).data(), 64 * sizeof(float)));
  }
}

TEST(SeedBasisTest, FingerprintIsFnv1aOverDimThenSeeds) {
  // Independent byte-at-a-time FNV-1a over the LE encoding.
  auto oracle = [](std::uint64_t dim, const std::vector<std::uint64_t>& seeds) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ULL;
      }
    };
    feed(dim);
    for (auto s : seeds) feed(s);
    return h;
  };
  const std::vector<std::uint64_t> seeds{3, 1, 4, 15, 92};
  EXPECT_EQ(SeedBasis::build(seeds, 100).fingerprint(), oracle(100, seeds));
}

TEST(SeedBasisTest, DeterministicAndOrderSensitive) {
  const SeedBasis a = SeedBasis::build({1, 2, 3}, 128);
  const SeedBasis b = SeedBasis::build({1, 2, 3}, 128);
  const SeedBasis c = SeedBasis::build({3, 2, 1}, 128);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(0, std::memcmp(a.vector(i).data(), b.vector(i).data(), 128 * sizeof(float)));
}

TEST(SeedBasisTest, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(SeedBasis::build({1, 2, 1}, 16), Error);
  EXPECT_THROW(SeedBasis::build({}, 16), Error);
}

TEST(SeedBasisTest, GramConcentration) {
  const SeedBasis b = SeedBasis::build(iota_seeds(128), 1024);
  const Projector p(b);
  double max_diag_dev = 0.0;
  double max_off = 0.0;
  for (std::size_t i = 0; i < 128; ++i)
    for (std::size_t j = 0; j < 128; ++j) {
      const double g = p.gram()(i, j) / 1024.0;
      if (i == j) {
        max_diag_dev = std::max(max_diag_dev, std::abs(g - 1.0));
      } else {
        max_off = std::max(max_off, std::abs(g));
      }
    }
  EXPECT_LE(max_diag_dev, 0.15);
  EXPECT_LE(max_off, 0.2);
}

TEST(ProjectExactTest, RecoversBasisMember) {
  const SeedBasis b = SeedBasis::build(iota_seeds(16, 40), 256);
  const Vec w = project_exact(basis_vec(b, 3), b).to_dense();
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], i == 3 ? 1.0 : 0.0, 1e-6);
}

TEST(ProjectExactTest, RecoversExactSpanCombination) {
  const SeedBasis b = SeedBasis::build(iota_seeds(16, 40), 256);
  Vec x(256);
  for (std::size_t d = 0; d < 256; ++d) x[d] = 2.0 * b.vector(1)[d] + 3.0 * b.vector(2)[d];
  const Vec w = project_exact(x, b).to_dense();
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], i == 1 ? 2.0 : (i == 2 ? 3.0 : 0.0), 1e-6);
}

TEST(ProjectExactTest, ResidualOrthogonalToBasis) {
  const SeedBasis b = SeedBasis::build(iota_seeds(16, 7), 256);
  const Vec x = random_vec(1234, 256);
  const Vec w = project_exact(x, b).to_dense();
  Vec r = x;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t d = 0; d < 256; ++d) r[d] -= w[i] * b.vector(i)[d];
  for (std::size_t i = 0; i < 16; ++i) {
    const Vec n = basis_vec(b, i);
    EXPECT_LE(std::abs(dot(r, n)), 1e-6 * norm2(x) * norm2(n));
  }
}

TEST(ProjectExactTest, DependentBasisIsDegenerate) {
  // More vectors than dimensions cannot be independent.
  const SeedBasis b = SeedBasis::build(iota_seeds(6), 4);
  try {
    project_exact(random_vec(1, 4), b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBasis);
  }
}

TEST(ProjectExactTest, DimensionMismatchRejected) {
  const SeedBasis b = SeedBasis::build(iota_seeds(4), 32);
  EXPECT_THROW(project_exact(random_vec(1, 31), b), Error);
}

TEST(ProjectGdTest, ZeroCorrelationGivesZeroWeights) {
  const SeedBasis b = SeedBasis::build(iota_seeds(8), 64);
  EXPECT_EQ(project_gd(Vec(64, 0.0), b).nonzeros(), 0u);

  // Gram-Schmidt: strip the span component from a random vector.
  const Vec x = random_vec(99, 64);
  const Projector p(b);
  const Vec w_exact = p.solve_exact(x);
  Vec orth = x;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t d = 0; d < 64; ++d) orth[d] -= w_exact[i] * b.vector(i)[d];
  for (double v : p.solve_gd(orth)) EXPECT_LE(std::abs(v), 1e-9);
}

TEST(ProjectGdTest, RecoversBasisMember) {
  const SeedBasis b = SeedBasis::build(iota_seeds(32), 512);
  const Vec w = project_gd(basis_vec(b, 0), b).to_dense();
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], i == 0 ? 1.0 : 0.0, 1e-4);
}

TEST(ProjectGdTest, MatchesExactSolution) {
  const SeedBasis b = SeedBasis::build(iota_seeds(64, 500), 1024);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Vec x = random_vec(seed, 1024);
    const Vec we = project_exact(x, b).to_dense();
    const Vec wg = project_gd(x, b).to_dense();
    double err = 0.0;
    for (std::size_t i = 0; i < we.size(); ++i) err += (we[i] - wg[i]) * (we[i] - wg[i]);
    EXPECT_LE(std::sqrt(err) / norm2(we), 1e-4);
  }
}

TEST(ProjectGdTest, NonConvergenceCarriesLastIterate) {
  const SeedBasis b = SeedBasis::build(iota_seeds(16), 128);
  GdConfig cfg;
  cfg.max_iters = 2;
  try {
    project_gd(random_vec(5, 128), b, cfg);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConvergence);
    EXPECT_EQ(e.last_iterate().size(), 16u);
    EXPECT_GT(e.relative_residual(), cfg.tol);
  }
}

WeightVector dense(std::initializer_list<double> v) { return WeightVector::from_dense(Vec(v)); }

std::vector<std::uint32_t> indices(const WeightVector& w) {
  std::vector<std::uint32_t> out;
  for (const auto& e : w.entries) out.push_back(e.index);
  return out;
}

TEST(TruncateTopkTest, Examples) {
  const WeightVector w = dense({0.5, -2.0, 1.0});
  EXPECT_EQ(truncate_topk(w, 3), w);
  EXPECT_EQ(indices(truncate_topk(w, 2)), (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(indices(truncate_topk(dense({1.0, -1.0, 0.5}), 1)), (std::vector<std::uint32_t>{0}));
}

TEST(TruncateTopkTest, KeepsExactlyKOnTies) {
  const WeightVector w = dense({1.0, 1.0, -1.0, 1.0, 0.25});
  EXPECT_EQ(indices(truncate_topk(w, 2)), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(indices(truncate_topk(w, 3)), (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(TruncateTopkTest, CountIsMinOfKAndNonzeros) {
  const WeightVector w = dense({0.0, 3.0, 0.0, -1.0});
  EXPECT_EQ(truncate_topk(w, 4).nonzeros(), 2u);
  EXPECT_EQ(truncate_topk(w, 1).nonzeros(), 1u);
}

TEST(TruncateTopkTest, RejectsOutOfRangeK) {
  const WeightVector w = dense({1.0, 2.0});
  EXPECT_THROW(truncate_topk(w, 3), Error);
  EXPECT_THROW(truncate_topk(w, 0), Error);
}

TEST(ReconstructTest, UnitWeightGivesBasisVectorBitwise) {
  const SeedBasis b = SeedBasis::build(iota_seeds(8), 100);
  WeightVector w{8, {{5, 1.0f}}};
  const auto x = reconstruct(w, b);
  EXPECT_EQ(0, std::memcmp(x.data(), b.vector(5).data(), 100 * sizeof(float)));
}

TEST(ReconstructTest, ZeroWeightsGiveZeroVector) {
  const SeedBasis b = SeedBasis::build(iota_seeds(8), 100);
  for (float v : reconstruct(WeightVector{8, {}}, b)) EXPECT_EQ(std::bit_cast<std::uint32_t>(v), 0u);
}

TEST(ReconstructTest, MatchesPinnedAccumulationOracle) {
  const SeedBasis b = SeedBasis::build(iota_seeds(16, 300), 257);
  SplitMix64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    WeightVector w{16, {}};
    for (std::uint32_t i = 0; i < 16; ++i)
      if (rng.below(2)) w.entries.push_back({i, static_cast<float>(rng.uniform() * 4 - 2)});
    const auto got = reconstruct(w, b);
    // Per-element loop in the pinned order: ascending index, double accumulate.
    for (std::size_t d = 0; d < 257; ++d) {
      double acc = 0.0;
      for (const auto& e : w.entries) acc += static_cast<double>(e.value) * static_cast<double>(b.vector(e.index)[d]);
      ASSERT_EQ(std::bit_cast<std::uint32_t>(static_cast<float>(acc)), std::bit_cast<std::uint32_t>(got[d]));
    }
  }
}

TEST(ReconstructTest, SizeMismatchRejected) {
  const SeedBasis b = SeedBasis::build(iota_seeds(8), 10);
  EXPECT_THROW(reconstruct(WeightVector{7, {}}, b), Error);
}

// --- properties -----------------------------------------------------------

TEST(NoiseCodecPropertyTest, ExactProjectionIsLocallyOptimal) {
  const SeedBasis b = SeedBasis::build(iota_seeds(6, 70), 48);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Vec x = random_vec(seed, 48);
    const Vec w = Projector(b).solve_exact(x);
    const double base = residual_sq(x, w, b);
    for (std::size_t i = 0; i < w.size(); ++i)
      for (double delta : {1e-3, -1e-3}) {
        Vec p = w;
        p[i] += delta;
        EXPECT_GT(residual_sq(x, p, b), base);
      }
  }
}

TEST(NoiseCodecPropertyTest, ProjectionIsLinear) {
  const SeedBasis b = SeedBasis::build(iota_seeds(16, 3), 256);
  const Projector p(b);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Vec x = random_vec(seed, 256);
    const Vec y = random_vec(seed + 50, 256);
    const double a = 0.5 + seed;
    const double c = -1.25;
    Vec combo(256);
    for (std::size_t d = 0; d < 256; ++d) combo[d] = a * x[d] + c * y[d];
    const Vec wc = p.solve_exact(combo);
    const Vec wx = p.solve_exact(x);
    const Vec wy = p.solve_exact(y);
    Vec diff(16);
    for (std::size_t i = 0; i < 16; ++i) diff[i] = wc[i] - (a * wx[i] + c * wy[i]);
    EXPECT_LE(norm2(diff), 1e-6 * norm2(wc));
  }
}

TEST(NoiseCodecPropertyTest, ProjectReconstructIsIdempotent) {
  const SeedBasis b = SeedBasis::build(iota_seeds(32, 11), 512);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto once = reconstruct(project_exact(random_vec(seed, 512), b), b);
    const auto twice = reconstruct(project_exact(Vec(once.begin(), once.end()), b), b);
    double err = 0.0;
    double nrm = 0.0;
    for (std::size_t d = 0; d < once.size(); ++d) {
      err += (static_cast<double>(once[d]) - twice[d]) * (static_cast<double>(once[d]) - twice[d]);
      nrm += static_cast<double>(once[d]) * once[d];
    }
    EXPECT_LE(std::sqrt(err), 1e-6 * std::sqrt(nrm));
  }
}

TEST(NoiseCodecPropertyTest, ResidualNonIncreasingInK) {
  const SeedBasis b = SeedBasis::build(iota_seeds(128), 1024);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Vec x = random_vec(seed * 7919, 1024);
    const WeightVector w = project_exact(x, b);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k : {1u, 2u, 4u, 8u, 16u, 32u, 64u, 96u, 128u}) {
      const auto rec = reconstruct(truncate_topk(w, k), b);
      double r = 0.0;
      for (std::size_t d = 0; d < 1024; ++d) r += (x[d] - rec[d]) * (x[d] - rec[d]);
      EXPECT_LE(r, prev) << "seed " << seed << " k " << k;
      prev = r;
    }
  }
}

}  // namespace
}  // namespace diffgo
