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

#ifndef DIFFGO_DIFFUSION_H_
#define DIFFGO_DIFFUSION_H_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diffgo/bytes.h"
#include "diffgo/image.h"
#include "diffgo/noise_codec.h"
#include "diffgo/numerics.h"

namespace diffgo {

// Variance schedule. Steps are 1-based: beta(t) for t in [1, T]; alpha_bar(0) = 1.
struct Schedule {
  Vec betas;
  Vec alphas;
  Vec alpha_bars;

  std::size_t steps() const { return betas.size(); }
  double beta(std::size_t t) const { return betas[t - 1]; }
  double alpha(std::size_t t) const { return alphas[t - 1]; }
  double alpha_bar(std::size_t t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }
};

inline constexpr std::size_t kDefaultSteps = 100;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.1;

// Betas linearly spaced from beta_start to beta_end inclusive.
Schedule make_linear_schedule(std::size_t steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd);

// Closed-form marginal q(x_t | x_0): sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Vec forward_diffuse(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                    const Schedule& sched);

// ---------------------------------------------------------------------------
// Reference epsilon-predictor
// ---------------------------------------------------------------------------

struct DenoiserShape {
  std::size_t dim = 1024;
  std::size_t time_dim = 32;
  std::size_t hidden = 256;
  std::size_t num_classes = 4;
  // Linear schedule the model is trained for; the skip path is scaled by
  // 1 / sqrt(1 - abar_t).
  std::size_t steps = kDefaultSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;

  std::size_t input_dim() const { return 3 * dim + time_dim; }
  // Per-pixel skip features: x_t, one-hot label, edge bit.
  std::size_t skip_features() const { return 2 + num_classes; }
  std::size_t skip_width() const { return time_dim + 1; }
  friend bool operator==(const DenoiserShape&, const DenoiserShape&) = default;
};

// MLP over concat(x_t, labels / (L-1), edges, time embedding) with two tanh
// layers and a linear head, plus a per-pixel skip path
//   (1 / sqrt(1 - abar_t)) * sum_k gain_k(t) * feature_k
// whose gains are piecewise linear in t (time_dim hat functions spanning
// [1, steps]).
// Tensors are listed in declaration order, which is also the checkpoint order.
struct DenoiserParams {
  DenoiserShape shape;
  std::uint64_t init_seed = 0;
  Vec w1;  // hidden x input_dim
  Vec b1;
  Vec w2;  // hidden x hidden
  Vec b2;
  Vec w3;  // dim x hidden
  Vec b3;
  Vec skip;  // skip_features x skip_width

  static constexpr std::size_t kNumTensors = 7;
  static constexpr std::array<const char*, kNumTensors> kTensorNames = {"w1", "b1", "w2", "b2",
                                                                        "w3", "b3", "skip"};

  static DenoiserParams zeros(const DenoiserShape& shape);
  // Scaled-normal weights from gaussian_stream for the hidden layers; output
  // layer, biases and skip gains start at zero. Every value is representable
  // in 32 bits.
  static DenoiserParams initialize(const DenoiserShape& shape, std::uint64_t seed);

  std::array<std::span<double>, kNumTensors> tensors();
  std::array<std::span<const double>, kNumTensors> tensors() const;
  std::size_t parameter_count() const;

  friend bool operator==(const DenoiserParams&, const DenoiserParams&) = default;
};

// Sinusoidal embedding: sin(t f_i) then cos(t f_i), f_i = 10000^(-i / (time_dim/2)).
Vec time_embedding(std::size_t t, std::size_t time_dim);

// Hat-function weights of t on `count` knots evenly spaced over [1, steps];
// non-negative and summing to 1.
Vec time_knots(std::size_t t, std::size_t steps, std::size_t count);

// The schedule a denoiser shape was built for.
Schedule model_schedule(const DenoiserShape& shape);

Vec denoiser_predict(const DenoiserParams& params, std::span<const double> x_t, std::size_t t,
                     const ConditionSet& cond);

// mean((predict - target)^2). When `grad` is non-null, adds scale * dLoss/dparams
// into it (grad must have the same shape as params).
double denoiser_loss(const DenoiserParams& params, std::span<const double> x_t, std::size_t t,
                     const ConditionSet& cond, std::span<const double> target,
                     DenoiserParams* grad = nullptr, double scale = 1.0);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainExample {
  Image image;
  ConditionSet cond;
};

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t train_seed = 1;
  std::uint64_t init_seed = 1;
  std::size_t hidden = 256;
  std::size_t time_dim = 32;
  GdConfig projection;
};

struct TrainResult {
  DenoiserParams params;
  std::vector<double> losses;  // mean batch loss per optimizer step
  std::size_t projected_samples = 0;  // samples drawn at t == T
};

// Adam on the denoising MSE. Samples at t == T have x_T replaced by its
// projection onto the seed basis and the target replaced by the matching
// effective noise. Single-threaded and fully determined by (dataset order,
// basis, schedule, cfg). Final parameters are rounded to 32 bits.
TrainResult train_diffgo(std::span<const TrainExample> dataset, const SeedBasis& basis,
                         const Schedule& sched, const TrainConfig& cfg);

// Mean of the first and last `window` entries of a loss curve.
struct LossSummary {
  double initial = 0.0;
  double final = 0.0;
};
LossSummary summarize_losses(std::span<const double> losses, std::size_t window = 50);

// ---------------------------------------------------------------------------
// Reverse process
// ---------------------------------------------------------------------------

enum class SamplerMode : std::uint8_t { kDeterministic = 0, kAncestral = 1 };

struct SamplerSpec {
  SamplerMode mode = SamplerMode::kDeterministic;
  std::uint64_t nonce = 0;  // ancestral only
};

// eps_hat = f(x_t, t)
using NoisePredictor = std::function<Vec(std::span<const double> x_t, std::size_t t)>;

// Runs t = T..1 and returns the clamped x0 estimate of the last step.
// Deterministic mode uses the noise-free DDIM update; ancestral mode uses the
// DDPM posterior with sigma_t^2 = beta_t and noise gaussian_stream(nonce ^ t).
Vec reverse_sample(const NoisePredictor& predict, std::span<const double> x_t, const Schedule& sched,
                   SamplerSpec spec = {});

Image reverse_sample(const DenoiserParams& params, std::span<const float> x_t, const ConditionSet& cond,
                     const Schedule& sched, SamplerSpec spec = {});

// ---------------------------------------------------------------------------
// Checkpoint: "DGM1" | dims header | f32 params | CRC32, all little-endian.
// ---------------------------------------------------------------------------

Bytes encode_checkpoint(const DenoiserParams& params);
DenoiserParams decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const DenoiserParams& params, const std::string& path);
DenoiserParams load_checkpoint(const std::string& path);

}  // namespace diffgo

#endif  // DIFFGO_DIFFUSION_H_
