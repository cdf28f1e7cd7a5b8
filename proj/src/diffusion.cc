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

#include "diffgo/diffusion.h"

#include <algorithm>
#include <cmath>

#include "diffgo/error.h"

namespace diffgo {

Schedule make_linear_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "schedule: need 0 < beta_start <= beta_end < 1");
  Schedule s;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    // Pin the last entry so the endpoints are reproduced exactly.
    s.betas[i] = i + 1 == steps && steps > 1 ? beta_end : beta_start + (beta_end - beta_start) * frac;
    s.alphas[i] = 1.0 - s.betas[i];
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
  }
  return s;
}

Vec forward_diffuse(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                    const Schedule& sched) {
  if (t < 1 || t > sched.steps()) throw Error(ErrorCode::kInvalidArgument, "forward_diffuse: t out of range");
  if (x0.size() != eps.size()) throw Error(ErrorCode::kInvalidArgument, "forward_diffuse: dimension mismatch");
  const double a = std::sqrt(sched.alpha_bar(t));
  const double s = std::sqrt(1.0 - sched.alpha_bar(t));
  Vec out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + s * eps[i];
  return out;
}

// ---------------------------------------------------------------------------

DenoiserParams DenoiserParams::zeros(const DenoiserShape& shape) {
  DenoiserParams p;
  p.shape = shape;
  const std::size_t h = shape.hidden;
  p.w1.assign(h * shape.input_dim(), 0.0);
  p.b1.assign(h, 0.0);
  p.w2.assign(h * h, 0.0);
  p.b2.assign(h, 0.0);
  p.w3.assign(shape.dim * h, 0.0);
  p.b3.assign(shape.dim, 0.0);
  p.skip.assign(shape.skip_features() * shape.skip_width(), 0.0);
  return p;
}

namespace {

void fill_scaled_normal(Vec& dst, std::uint64_t seed, double scale) {
  const std::vector<float> z = gaussian_stream(seed, dst.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(scale * z[i]);
}

}  // namespace

DenoiserParams DenoiserParams::initialize(const DenoiserShape& shape, std::uint64_t seed) {
  DenoiserParams p = zeros(shape);
  p.init_seed = seed;
  fill_scaled_normal(p.w1, derive_seed(seed, 1), 1.0 / std::sqrt(static_cast<double>(shape.input_dim())));
  fill_scaled_normal(p.w2, derive_seed(seed, 2), 1.0 / std::sqrt(static_cast<double>(shape.hidden)));
  // w3 stays zero: the untrained MLP contributes nothing on top of the skip path.
  return p;
}

std::array<std::span<double>, DenoiserParams::kNumTensors> DenoiserParams::tensors() {
  return {w1, b1, w2, b2, w3, b3, skip};
}

std::array<std::span<const double>, DenoiserParams::kNumTensors> DenoiserParams::tensors() const {
  return {w1, b1, w2, b2, w3, b3, skip};
}

std::size_t DenoiserParams::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

Vec time_embedding(std::size_t t, std::size_t time_dim) {
  const std::size_t half = time_dim / 2;
  Vec e(time_dim, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(static_cast<double>(t) * freq);
    e[half + i] = std::cos(static_cast<double>(t) * freq);
  }
  return e;
}

Vec time_knots(std::size_t t, std::size_t steps, std::size_t count) {
  Vec w(count, 0.0);
  if (count == 0) return w;
  if (count == 1 || steps <= 1) {
    w[0] = 1.0;
    return w;
  }
  const double clamped = std::clamp(static_cast<double>(t), 1.0, static_cast<double>(steps));
  const double pos = (clamped - 1.0) / static_cast<double>(steps - 1) * static_cast<double>(count - 1);
  const std::size_t lo = std::min(static_cast<std::size_t>(pos), count - 2);
  const double frac = pos - static_cast<double>(lo);
  w[lo] = 1.0 - frac;
  w[lo + 1] = frac;
  return w;
}

Schedule model_schedule(const DenoiserShape& shape) {
  return make_linear_schedule(shape.steps, shape.beta_start, shape.beta_end);
}

namespace {

struct Activations {
  Vec input;  // concat(x_t, labels, edges, temb)
  Vec h1;
  Vec h2;
  Vec out;
  Vec knots;  // skip-gain time basis
  Vec gains;  // one per skip feature
  double skip_scale = 0.0;
};

void check_inputs(const DenoiserParams& p, std::span<const double> x_t, std::size_t t,
                  const ConditionSet& cond) {
  const std::size_t dim = p.shape.dim;
  if (x_t.size() != dim || cond.labels.size() != dim || cond.edges.size() != dim)
    throw Error(ErrorCode::kInvalidArgument, "denoiser: input dimension mismatch");
  if (static_cast<std::size_t>(cond.num_classes) != p.shape.num_classes)
    throw Error(ErrorCode::kInvalidArgument, "denoiser: class count mismatch");
  if (t < 1 || t > p.shape.steps) throw Error(ErrorCode::kInvalidArgument, "denoiser: t out of range");
}

// Value of skip feature k at pixel p.
double skip_feature(const Activations& a, const ConditionSet& cond, std::size_t num_classes,
                    std::size_t k, std::size_t p) {
  if (k == 0) return a.input[p];
  if (k <= num_classes) return cond.labels.labels[p] == k - 1 ? 1.0 : 0.0;
  return cond.edges.bits[p];
}

Activations run_forward(const DenoiserParams& p, std::span<const double> x_t, std::size_t t,
                        const ConditionSet& cond) {
  check_inputs(p, x_t, t, cond);
  const DenoiserShape& s = p.shape;
  const std::size_t dim = s.dim;
  const std::size_t in_dim = s.input_dim();
  const std::size_t h = s.hidden;
  const double label_scale = s.num_classes > 1 ? 1.0 / static_cast<double>(s.num_classes - 1) : 0.0;

  Activations a;
  a.input.resize(in_dim);
  std::copy(x_t.begin(), x_t.end(), a.input.begin());
  for (std::size_t i = 0; i < dim; ++i) {
    a.input[dim + i] = cond.labels.labels[i] * label_scale;
    a.input[2 * dim + i] = cond.edges.bits[i];
  }
  const Vec temb = time_embedding(t, s.time_dim);
  std::copy(temb.begin(), temb.end(), a.input.begin() + static_cast<std::ptrdiff_t>(3 * dim));

  a.h1.resize(h);
  for (std::size_t r = 0; r < h; ++r) {
    const double* row = &p.w1[r * in_dim];
    double acc = p.b1[r];
    for (std::size_t c = 0; c < in_dim; ++c) acc += row[c] * a.input[c];
    a.h1[r] = std::tanh(acc);
  }
  a.h2.resize(h);
  for (std::size_t r = 0; r < h; ++r) {
    const double* row = &p.w2[r * h];
    double acc = p.b2[r];
    for (std::size_t c = 0; c < h; ++c) acc += row[c] * a.h1[c];
    a.h2[r] = std::tanh(acc);
  }
  a.out.resize(dim);
  for (std::size_t r = 0; r < dim; ++r) {
    const double* row = &p.w3[r * h];
    double acc = p.b3[r];
    for (std::size_t c = 0; c < h; ++c) acc += row[c] * a.h2[c];
    a.out[r] = acc;
  }

  const std::size_t nf = s.skip_features();
  const std::size_t sw = s.skip_width();
  a.knots = time_knots(t, s.steps, s.time_dim);
  a.skip_scale = 1.0 / std::sqrt(1.0 - model_schedule(s).alpha_bar(t));
  a.gains.resize(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    const double* row = &p.skip[k * sw];
    double g = row[s.time_dim];
    for (std::size_t j = 0; j < s.time_dim; ++j) g += row[j] * a.knots[j];
    a.gains[k] = g;
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nf; ++k) acc += a.gains[k] * skip_feature(a, cond, s.num_classes, k, i);
    a.out[i] += a.skip_scale * acc;
  }
  return a;
}

void run_backward(const DenoiserParams& p, const Activations& a, const ConditionSet& cond,
                  std::span<const double> dout, DenoiserParams& g) {
  const DenoiserShape& s = p.shape;
  const std::size_t dim = s.dim;
  const std::size_t in_dim = s.input_dim();
  const std::size_t h = s.hidden;

  // Skip path.
  const std::size_t nf = s.skip_features();
  const std::size_t sw = s.skip_width();
  for (std::size_t k = 0; k < nf; ++k) {
    double dgain = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dgain += dout[i] * skip_feature(a, cond, s.num_classes, k, i);
    dgain *= a.skip_scale;
    double* row = &g.skip[k * sw];
    for (std::size_t j = 0; j < s.time_dim; ++j) row[j] += dgain * a.knots[j];
    row[s.time_dim] += dgain;
  }

  // Output layer.
  Vec dh2(h, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    const double d = dout[r];
    if (d == 0.0) continue;
    g.b3[r] += d;
    double* grow = &g.w3[r * h];
    const double* prow = &p.w3[r * h];
    for (std::size_t c = 0; c < h; ++c) {
      grow[c] += d * a.h2[c];
      dh2[c] += d * prow[c];
    }
  }

  Vec da2(h);
  for (std::size_t r = 0; r < h; ++r) da2[r] = dh2[r] * (1.0 - a.h2[r] * a.h2[r]);
  Vec dh1(h, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    const double d = da2[r];
    g.b2[r] += d;
    double* grow = &g.w2[r * h];
    const double* prow = &p.w2[r * h];
    for (std::size_t c = 0; c < h; ++c) {
      grow[c] += d * a.h1[c];
      dh1[c] += d * prow[c];
    }
  }

  for (std::size_t r = 0; r < h; ++r) {
    const double d = dh1[r] * (1.0 - a.h1[r] * a.h1[r]);
    g.b1[r] += d;
    double* grow = &g.w1[r * in_dim];
    for (std::size_t c = 0; c < in_dim; ++c) grow[c] += d * a.input[c];
  }
}

}  // namespace

Vec denoiser_predict(const DenoiserParams& params, std::span<const double> x_t, std::size_t t,
                     const ConditionSet& cond) {
  return run_forward(params, x_t, t, cond).out;
}

double denoiser_loss(const DenoiserParams& params, std::span<const double> x_t, std::size_t t,
                     const ConditionSet& cond, std::span<const double> target, DenoiserParams* grad,
                     double scale) {
  if (target.size() != params.shape.dim)
    throw Error(ErrorCode::kInvalidArgument, "denoiser_loss: target dimension mismatch");
  const Activations a = run_forward(params, x_t, t, cond);
  const double inv_n = 1.0 / static_cast<double>(target.size());
  double loss = 0.0;
  Vec dout(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double diff = a.out[i] - target[i];
    loss += diff * diff;
    dout[i] = 2.0 * diff * inv_n * scale;
  }
  if (grad != nullptr) run_backward(params, a, cond, dout, *grad);
  return loss * inv_n;
}

// ---------------------------------------------------------------------------

namespace {

Vec to_vec(std::span<const float> v) { return Vec(v.begin(), v.end()); }

void round_to_f32(DenoiserParams& p) {
  for (auto t : p.tensors())
    for (double& v : t) v = static_cast<float>(v);
}

}  // namespace

TrainResult train_diffgo(std::span<const TrainExample> dataset, const SeedBasis& basis,
                         const Schedule& sched, const TrainConfig& cfg) {
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "train_diffgo: empty dataset");
  const std::size_t dim = dataset.front().image.size();
  if (basis.dim() != dim) throw Error(ErrorCode::kInvalidArgument, "train_diffgo: basis dimension != image size");
  for (const auto& ex : dataset)
    if (ex.image.size() != dim) throw Error(ErrorCode::kInvalidArgument, "train_diffgo: ragged dataset");
  if (cfg.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "train_diffgo: batch_size must be >= 1");

  DenoiserShape shape;
  shape.dim = dim;
  shape.hidden = cfg.hidden;
  shape.time_dim = cfg.time_dim;
  shape.num_classes = static_cast<std::size_t>(dataset.front().cond.num_classes);
  shape.steps = sched.steps();
  shape.beta_start = sched.beta(1);
  shape.beta_end = sched.beta(sched.steps());

  TrainResult result;
  result.params = DenoiserParams::initialize(shape, cfg.init_seed);
  if (cfg.steps == 0) return result;

  DenoiserParams& params = result.params;
  DenoiserParams grad = DenoiserParams::zeros(shape);
  DenoiserParams m = DenoiserParams::zeros(shape);
  DenoiserParams v = DenoiserParams::zeros(shape);

  const Projector projector(basis);
  const std::size_t big_t = sched.steps();
  const double sqrt_ab_t = std::sqrt(sched.alpha_bar(big_t));
  const double sqrt_1m_ab_t = std::sqrt(1.0 - sched.alpha_bar(big_t));
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

  SplitMix64 rng(cfg.train_seed);
  result.losses.reserve(cfg.steps);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (auto t : grad.tensors()) std::fill(t.begin(), t.end(), 0.0);

    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const TrainExample& ex = dataset[rng.below(dataset.size())];
      const std::size_t t = 1 + rng.below(big_t);
      const std::uint64_t eps_seed = rng.next();

      const Vec x0 = to_vec(ex.image.pixels);
      Vec eps = to_vec(gaussian_stream(eps_seed, dim));
      Vec x_t = forward_diffuse(x0, t, eps, sched);
      if (t == big_t) {
        const WeightVector w = WeightVector::from_dense(projector.solve_gd(x_t, cfg.projection));
        x_t = to_vec(reconstruct(w, basis));
        for (std::size_t i = 0; i < dim; ++i) eps[i] = (x_t[i] - sqrt_ab_t * x0[i]) / sqrt_1m_ab_t;
        ++result.projected_samples;
      }
      batch_loss += denoiser_loss(params, x_t, t, ex.cond, eps, &grad, inv_batch);
    }
    result.losses.push_back(batch_loss * inv_batch);

    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    auto pt = params.tensors();
    auto gt = grad.tensors();
    auto mt = m.tensors();
    auto vt = v.tensors();
    for (std::size_t k = 0; k < DenoiserParams::kNumTensors; ++k) {
      for (std::size_t i = 0; i < pt[k].size(); ++i) {
        const double gi = gt[k][i];
        mt[k][i] = cfg.beta1 * mt[k][i] + (1.0 - cfg.beta1) * gi;
        vt[k][i] = cfg.beta2 * vt[k][i] + (1.0 - cfg.beta2) * gi * gi;
        const double mhat = mt[k][i] / bc1;
        const double vhat = vt[k][i] / bc2;
        pt[k][i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    }
  }
  round_to_f32(params);
  return result;
}

LossSummary summarize_losses(std::span<const double> losses, std::size_t window) {
  LossSummary s;
  if (losses.empty()) return s;
  const std::size_t w = std::max<std::size_t>(1, std::min(window, losses.size()));
  for (std::size_t i = 0; i < w; ++i) {
    s.initial += losses[i];
    s.final += losses[losses.size() - w + i];
  }
  s.initial /= static_cast<double>(w);
  s.final /= static_cast<double>(w);
  return s;
}

// ---------------------------------------------------------------------------

Vec reverse_sample(const NoisePredictor& predict, std::span<const double> x_big_t, const Schedule& sched,
                   SamplerSpec spec) {
  const std::size_t dim = x_big_t.size();
  Vec x(x_big_t.begin(), x_big_t.end());
  Vec x0_hat(dim);
  for (std::size_t t = sched.steps(); t >= 1; --t) {
    const Vec eps = predict(x, t);
    if (eps.size() != dim) throw Error(ErrorCode::kInvalidArgument, "reverse_sample: predictor output size");
    const double ab = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);
    const double sqrt_ab = std::sqrt(ab);
    const double sqrt_1m_ab = std::sqrt(1.0 - ab);
    for (std::size_t i = 0; i < dim; ++i)
      x0_hat[i] = std::clamp((x[i] - sqrt_1m_ab * eps[i]) / sqrt_ab, -1.0, 1.0);
    if (t == 1) break;

    if (spec.mode == SamplerMode::kDeterministic) {
      const double a = std::sqrt(ab_prev);
      const double b = std::sqrt(1.0 - ab_prev);
      for (std::size_t i = 0; i < dim; ++i) x[i] = a * x0_hat[i] + b * eps[i];
    } else {
      const double beta = sched.beta(t);
      const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
      const double ct = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
      const double sigma = std::sqrt(beta);
      const std::vector<float> z = gaussian_stream(spec.nonce ^ static_cast<std::uint64_t>(t), dim);
      for (std::size_t i = 0; i < dim; ++i) x[i] = c0 * x0_hat[i] + ct * x[i] + sigma * z[i];
    }
  }
  return x0_hat;
}

Image reverse_sample(const DenoiserParams& params, std::span<const float> x_t, const ConditionSet& cond,
                     const Schedule& sched, SamplerSpec spec) {
  if (x_t.size() != params.shape.dim) throw Error(ErrorCode::kInvalidArgument, "reverse_sample: latent size");
  if (sched.alpha_bars != model_schedule(params.shape).alpha_bars)
    throw Error(ErrorCode::kInvalidArgument, "reverse_sample: schedule differs from the model's");
  const NoisePredictor predict = [&](std::span<const double> x, std::size_t t) {
    return denoiser_predict(params, x, t, cond);
  };
  const Vec out = reverse_sample(predict, to_vec(x_t), sched, spec);
  Image img{cond.labels.height, cond.labels.width, std::vector<float>(out.size())};
  for (std::size_t i = 0; i < out.size(); ++i) img.pixels[i] = static_cast<float>(out[i]);
  return img;
}

}  // namespace diffgo
