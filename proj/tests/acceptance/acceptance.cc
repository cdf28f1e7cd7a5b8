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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// The model is trained once (200 scenes, 2000 steps) and shared by the
// end-to-end criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "diffgo/error.h"
#include "diffgo/experiment.h"

namespace {

using namespace diffgo;
using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vec to_vec(std::span<const float> v) { return Vec(v.begin(), v.end()); }

bool same_bits(const Image& a, const Image& b) {
  return a.height == b.height && a.width == b.width && a.pixels.size() == b.pixels.size() &&
         std::memcmp(a.pixels.data(), b.pixels.data(), a.pixels.size() * sizeof(float)) == 0;
}

// Distinct random seeds.
std::vector<std::uint64_t> random_seeds(SplitMix64& rng, std::size_t n) {
  std::set<std::uint64_t> seen;
  std::vector<std::uint64_t> out;
  while (out.size() < n) {
    const std::uint64_t s = rng.next();
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

void codec_determinism() {
  const auto t0 = Clock::now();
  SplitMix64 rng(0xC0DEC);
  std::size_t mismatches = 0;
  std::uint64_t floats = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.next() % 64;
    const std::size_t dim = 1 + rng.next() % 1024;
    const auto seeds = random_seeds(rng, n);
    const SeedBasis a = SeedBasis::build(seeds, dim);
    const SeedBasis b = SeedBasis::build(seeds, dim);
    bool same = a.fingerprint() == b.fingerprint() && a.seeds() == b.seeds();
    for (std::size_t j = 0; same && j < n; ++j)
      same = std::memcmp(a.vector(j).data(), b.vector(j).data(), dim * sizeof(float)) == 0;
    mismatches += same ? 0 : 1;
    floats += n * dim;
  }
  const double secs = seconds_since(t0);
  report(1, "codec determinism", mismatches == 0 && secs < 30.0,
         fmt("%zu/1000 builds differ, %llu floats, %.2f s (limit 30 s)", mismatches,
             static_cast<unsigned long long>(floats), secs));
}

// max_i |<r, N_i>| / (||x|| ||N_i||)
double orthogonality(std::span<const double> x, const Vec& w, const SeedBasis& basis) {
  Vec r(x.begin(), x.end());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto v = basis.vector(i);
    for (std::size_t d = 0; d < r.size(); ++d) r[d] -= w[i] * v[d];
  }
  const double xn = norm2(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Vec v = to_vec(basis.vector(i));
    worst = std::max(worst, std::abs(dot(r, v)) / (xn * norm2(v)));
  }
  return worst;
}

void projection_equivalence() {
  const auto t0 = Clock::now();
  SplitMix64 rng(0x9801EC7);
  const std::size_t ns[] = {16, 64, 128};
  const std::size_t dims[] = {256, 1024};
  double worst_rel = 0.0;
  double worst_orth_exact = 0.0;
  double worst_orth_gd = 0.0;
  int failures = 0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = ns[c % 3];
    const std::size_t dim = dims[(c / 3) % 2];
    const SeedBasis basis = SeedBasis::build(random_seeds(rng, n), dim);
    const double scale = 0.1 + 2.0 * unit_interval(rng.next());
    Vec x = to_vec(gaussian_stream(rng.next(), dim));
    for (double& v : x) v *= scale;

    const Projector proj(basis);
    const Vec we = proj.solve_exact(x);
    const Vec wg = proj.solve_gd(x);
    Vec diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = wg[i] - we[i];
    const double rel = norm2(diff) / norm2(we);
    const double oe = orthogonality(x, we, basis);
    const double og = orthogonality(x, wg, basis);
    worst_rel = std::max(worst_rel, rel);
    worst_orth_exact = std::max(worst_orth_exact, oe);
    worst_orth_gd = std::max(worst_orth_gd, og);
    if (rel > 1e-4 || oe > 1e-6 || og > 1e-6) ++failures;
  }
  const double secs = seconds_since(t0);
  report(2, "projection equivalence", failures == 0 && secs < 120.0,
         fmt("200 cases, %d failing; max rel %.2e (<=1e-4), max |<r,N>|/(|x||N|) exact %.2e gd %.2e "
             "(<=1e-6), %.1f s",
             failures, worst_rel, worst_orth_exact, worst_orth_gd, secs));
}

void span_recovery() {
  SplitMix64 rng(0x5BA9);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 8 + rng.next() % 121;
    const SeedBasis basis = SeedBasis::build(random_seeds(rng, n), 1024);
    const std::size_t m = 1 + rng.next() % 8;
    Vec truth(n, 0.0);
    std::set<std::size_t> picked;
    while (picked.size() < m) picked.insert(rng.next() % n);
    for (std::size_t i : picked) truth[i] = 4.0 * unit_interval(rng.next()) - 2.0;
    Vec x(1024, 0.0);
    for (std::size_t i : picked) {
      const auto v = basis.vector(i);
      for (std::size_t d = 0; d < x.size(); ++d) x[d] += truth[i] * v[d];
    }
    const Vec w = Projector(basis).solve_exact(x);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(w[i] - truth[i]));
  }
  report(3, "span recovery", worst <= 1e-5, fmt("100 trials, <=8 active of n in [8,128]; max coef error %.2e (<=1e-5)", worst));
}

void forward_moments(const Schedule& sched) {
  constexpr std::size_t kDraws = 10000;
  const std::size_t steps[] = {1, sched.steps() / 2, sched.steps()};
  const double x0s[] = {-0.6, 0.8};
  double worst_sigma = 0.0;
  for (std::size_t t : steps) {
    for (double x0 : x0s) {
      const Vec x(kDraws, x0);
      const Vec eps = to_vec(gaussian_stream(derive_seed(0x3017, t * 10 + (x0 > 0)), kDraws));
      const Vec xt = forward_diffuse(x, t, eps, sched);
      const double ab = sched.alpha_bar(t);
      const double mean_ref = std::sqrt(ab) * x0;
      const double var_ref = 1.0 - ab;
      double mean = 0.0;
      for (double v : xt) mean += v;
      mean /= kDraws;
      double var = 0.0;
      for (double v : xt) var += (v - mean) * (v - mean);
      var /= kDraws - 1;
      const double z_mean = std::abs(mean - mean_ref) / std::sqrt(var_ref / kDraws);
      const double z_var = std::abs(var - var_ref) / (var_ref * std::sqrt(2.0 / (kDraws - 1)));
      worst_sigma = std::max({worst_sigma, z_mean, z_var});
    }
  }
  report(4, "forward moments", worst_sigma <= 3.0,
         fmt("t in {1,%zu,%zu}, x0 in {-0.6,0.8}, 1e4 draws; worst deviation %.2f sigma (<=3)", sched.steps() / 2,
             sched.steps(), worst_sigma));
}

void gradient_check(const DenoiserParams& trained, const Schedule& sched) {
  DenoiserParams params = trained;
  const Scene scene = generate_scene(424242);
  const ConditionSet cond = make_conditions(scene.labels);
  const std::size_t t = 37;
  const Vec eps = to_vec(gaussian_stream(77, scene.image.size()));
  const Vec x_t = forward_diffuse(to_vec(scene.image.pixels), t, eps, sched);

  DenoiserParams grad = DenoiserParams::zeros(params.shape);
  denoiser_loss(params, x_t, t, cond, eps, &grad);

  SplitMix64 rng(0x96AD);
  // Loss is ~0.05 and some w1 gradients are ~1e-9, so the central difference
  // is round-off limited: a larger step keeps the absolute error near 1e-14.
  constexpr double h = 1e-4;
  double worst = 0.0;
  std::size_t checked = 0;
  auto tensors = params.tensors();
  const auto grads = grad.tensors();
  for (std::size_t k = 0; k < DenoiserParams::kNumTensors; ++k) {
    for (int j = 0; j < 6; ++j) {
      const std::size_t i = rng.next() % tensors[k].size();
      const double saved = tensors[k][i];
      tensors[k][i] = saved + h;
      const double up = denoiser_loss(params, x_t, t, cond, eps);
      tensors[k][i] = saved - h;
      const double down = denoiser_loss(params, x_t, t, cond, eps);
      tensors[k][i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double bp = grads[k][i];
      const double denom = std::max(std::abs(fd), std::abs(bp));
      const double rel = fd == bp ? 0.0 : std::abs(fd - bp) / denom;
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  report(5, "gradient check", checked >= 30 && worst <= 1e-4,
         fmt("%zu random parameters across %zu tensors, trained model, t=%zu; max rel error %.2e (<=1e-4)", checked,
             DenoiserParams::kNumTensors, t, worst));
}

struct RandomMessages {
  SplitMix64 rng;

  DiffGoMessage next(std::size_t max_side, std::size_t max_n) {
    DiffGoMessage m;
    m.basis_fingerprint = rng.next();
    m.weights.n = static_cast<std::uint32_t>(1 + rng.next() % max_n);
    const std::size_t k = rng.next() % (m.weights.n + 1);
    std::set<std::uint32_t> idx;
    while (idx.size() < k) idx.insert(static_cast<std::uint32_t>(rng.next() % m.weights.n));
    for (std::uint32_t i : idx) {
      float v = 0.0f;
      while (v == 0.0f) v = static_cast<float>(8.0 * unit_interval(rng.next()) - 4.0);
      m.weights.entries.push_back({i, v});
    }
    const int h = static_cast<int>(1 + rng.next() % max_side);
    const int w = static_cast<int>(1 + rng.next() % max_side);
    m.conditions.num_classes = static_cast<int>(1 + rng.next() % 6);
    m.conditions.labels = {h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w)};
    m.conditions.edges = {h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w)};
    // Blocky labels so runs have varied lengths.
    std::uint8_t label = 0;
    for (auto& l : m.conditions.labels.labels) {
      if (rng.next() % 5 == 0) label = static_cast<std::uint8_t>(rng.next() % m.conditions.num_classes);
      l = label;
    }
    for (auto& b : m.conditions.edges.bits) b = rng.next() % 3 == 0;
    m.sampler.mode = rng.next() % 2 ? SamplerMode::kAncestral : SamplerMode::kDeterministic;
    m.sampler.nonce = m.sampler.mode == SamplerMode::kAncestral ? rng.next() : 0;
    return m;
  }
};

bool flip_detected(Bytes bytes, std::size_t pos, std::uint8_t mask) {
  bytes[pos] ^= mask;
  try {
    decode_message(bytes);
  } catch (const Error& e) {
    return e.code() == ErrorCode::kCorruptMessage;
  }
  return false;
}

void wire_roundtrip() {
  const auto t0 = Clock::now();
  RandomMessages gen{SplitMix64(0x0D1E)};
  std::size_t roundtrip_failures = 0;
  std::size_t flips = 0;
  std::size_t undetected = 0;
  for (int i = 0; i < 10000; ++i) {
    const DiffGoMessage m = gen.next(40, 256);
    const Bytes bytes = encode_message(m);
    bool ok = false;
    try {
      const DiffGoMessage back = decode_message(bytes);
      ok = back == m && encode_message(back) == bytes;
    } catch (const Error&) {
    }
    roundtrip_failures += ok ? 0 : 1;
    for (int f = 0; f < 4; ++f) {
      const std::size_t pos = gen.rng.next() % bytes.size();
      const auto mask = static_cast<std::uint8_t>(1 + gen.rng.next() % 255);
      undetected += flip_detected(bytes, pos, mask) ? 0 : 1;
      ++flips;
    }
  }
  // Exhaustive: every position and every nonzero xor value on small messages.
  std::size_t exhaustive = 0;
  for (int i = 0; i < 40; ++i) {
    const Bytes bytes = encode_message(gen.next(6, 12));
    for (std::size_t pos = 0; pos < bytes.size(); ++pos)
      for (int mask = 1; mask < 256; ++mask) {
        undetected += flip_detected(bytes, pos, static_cast<std::uint8_t>(mask)) ? 0 : 1;
        ++exhaustive;
      }
  }
  report(7, "wire roundtrip", roundtrip_failures == 0 && undetected == 0,
         fmt("1e4 messages, %zu roundtrip failures; %zu random + %zu exhaustive single-byte corruptions, %zu "
             "undetected, %.1f s",
             roundtrip_failures, flips, exhaustive, undetected, seconds_since(t0)));
}

// ---------------------------------------------------------------------------
// Trained-model criteria
// ---------------------------------------------------------------------------

constexpr std::uint64_t kForwardSeedBase = 24301;
std::uint64_t forward_seed(std::uint64_t scene_seed) { return derive_seed(kForwardSeedBase, scene_seed); }

const std::vector<std::size_t> kHierarchy = {1, 8, 32};

void hierarchical_stop(const SharedModel& shared, double* tau_out) {
  const GoalMetric metric = make_goal_metric("rmse");
  const std::size_t n = shared.basis.size();
  std::vector<std::size_t> ladder = kHierarchy;
  ladder.push_back(n);

  struct Brute {
    Scene scene;
    std::vector<double> scores;
  };
  std::vector<Brute> items;
  std::vector<double> all;
  for (std::uint64_t s = 200001; s <= 200020; ++s) {
    Brute b{generate_scene(s), {}};
    const Vec x = encode_latent(b.scene.image, shared.sched, forward_seed(s));
    const WeightVector full = WeightVector::from_dense(Projector(shared.basis).solve_gd(x));
    const ConditionSet cond = make_conditions(b.scene.labels);
    for (std::size_t k : ladder) b.scores.push_back(evaluate_candidate(full, k, cond, b.scene, shared, metric).score.value);
    all.insert(all.end(), b.scores.begin(), b.scores.end());
    items.push_back(std::move(b));
  }
  // Mid-range threshold: the median candidate score.
  std::sort(all.begin(), all.end());
  const double tau = all[all.size() / 2];
  *tau_out = tau;

  std::size_t agree = 0;
  std::vector<std::size_t> histogram(ladder.size(), 0);
  for (const Brute& b : items) {
    std::size_t expected = n;
    for (std::size_t i = 0; i < ladder.size(); ++i)
      if (b.scores[i] <= tau) {
        expected = ladder[i];
        break;
      }
    const TransmitResult tx =
        transmit_pipeline(b.scene, shared, metric, TransmitConfig{tau, kHierarchy, forward_seed(b.scene.seed), {}});
    const std::size_t chosen = tx.message.k_used();
    agree += chosen == expected ? 1 : 0;
    histogram[std::find(ladder.begin(), ladder.end(), chosen) - ladder.begin()] += 1;
  }
  report(11, "hierarchical stop", agree == items.size(),
         fmt("rmse, tau=%.6f (median); %zu/20 agree with brute force; chosen k 1/8/32/128: %zu/%zu/%zu/%zu", tau,
             agree, histogram[0], histogram[1], histogram[2], histogram[3]));
}

void end_to_end(const DenoiserParams& params, const SeedBasis& basis, const Schedule& sched, double tau,
                std::vector<std::pair<Accounting, std::size_t>>* accounting) {
  const SharedModel tx_side{params, basis, sched};
  // The receiver holds its own copies, restored from the checkpoint bytes and
  // rebuilt from the seed list.
  const DenoiserParams rx_params = decode_checkpoint(encode_checkpoint(params));
  const SeedBasis rx_basis = SeedBasis::build(basis.seeds(), basis.dim());
  const Schedule rx_sched = model_schedule(rx_params.shape);
  const SharedModel rx_side{rx_params, rx_basis, rx_sched};

  const GoalMetric metric = make_goal_metric("rmse");
  std::stringstream wire(std::ios::in | std::ios::out | std::ios::binary);
  FramedStreamTransport link(wire);
  std::size_t exact = 0;
  std::set<std::size_t> ks;
  for (std::uint64_t s = 100001; s <= 100050; ++s) {
    const Scene scene = generate_scene(s);
    const TransmitResult tx = transmit_pipeline(scene, tx_side, metric, TransmitConfig{tau, kHierarchy, forward_seed(s), {}});
    link.send(encode_message(tx.message));
    const auto frame = link.receive();
    if (!frame) continue;
    const DiffGoMessage rx = decode_message(*frame);
    exact += same_bits(receive_pipeline(rx, rx_side), tx.accepted) ? 1 : 0;
    ks.insert(rx.k_used());
    accounting->emplace_back(floats_transmitted(rx, Method::kDiffGo), rx.k_used());
  }
  std::string ks_text;
  for (std::size_t k : ks) ks_text += (ks_text.empty() ? "" : ",") + std::to_string(k);
  report(6, "end-to-end exactness", exact == 50,
         fmt("%zu/50 receiver images byte-identical to the accepted candidate (framed stream, k used {%s})", exact,
             ks_text.c_str()));
}

struct Evaluation {
  std::vector<Scene> truths;
  std::vector<Image> od, rn, gesco;
  std::vector<std::vector<Image>> ablation;
  std::vector<std::vector<double>> residuals;  // per k, per scene
  std::vector<MethodOutcome> accounting_samples;
};

const std::vector<std::size_t> kAblationK = {1, 8, 32, 128};

Evaluation evaluate(const SharedModel& shared) {
  const GoalMetric metric = make_goal_metric("miou");
  Evaluation ev;
  ev.ablation.resize(kAblationK.size());
  ev.residuals.resize(kAblationK.size());
  for (std::uint64_t s = 100001; s <= 100050; ++s) {
    const Scene scene = generate_scene(s);
    RunOptions opts;
    opts.forward_seed = forward_seed(s);
    MethodOutcome od = run_method(scene, shared, metric, Method::kOd, opts);
    MethodOutcome rn = run_method(scene, shared, metric, Method::kRn, opts);
    MethodOutcome gesco = run_method(scene, shared, metric, Method::kGesco, opts);
    ev.od.push_back(od.reconstruction);
    ev.rn.push_back(rn.reconstruction);
    ev.gesco.push_back(gesco.reconstruction);
    for (std::size_t i = 0; i < kAblationK.size(); ++i) {
      opts.fixed_k = kAblationK[i];
      MethodOutcome r = run_method(scene, shared, metric, Method::kDiffGo, opts);
      ev.ablation[i].push_back(r.reconstruction);
      ev.residuals[i].push_back(r.latent_residual);
      ev.accounting_samples.push_back(std::move(r));
    }
    ev.accounting_samples.push_back(std::move(od));
    ev.accounting_samples.push_back(std::move(rn));
    ev.accounting_samples.push_back(std::move(gesco));
    ev.truths.push_back(scene);
  }
  return ev;
}

void accounting_check(const Evaluation& ev, const std::vector<std::pair<Accounting, std::size_t>>& pipeline_accounting, std::size_t dim) {
  std::size_t checked = 0;
  std::size_t wrong = 0;
  auto check = [&](const Accounting& a, Method m, std::size_t k_used) {
    double expected = 0.0;
    switch (m) {
      case Method::kDiffGo: expected = static_cast<double>(k_used); break;
      case Method::kOd: expected = static_cast<double>(dim); break;
      case Method::kRn:
      case Method::kGesco: expected = 0.0; break;
    }
    const bool ok = a.method == m && a.extra_floats == expected && a.condition_floats == static_cast<double>(dim) &&
                    a.total_floats == a.condition_floats + a.edge_floats + a.extra_floats &&
                    (m != Method::kGesco || a.edge_floats == 0.0);
    ++checked;
    wrong += ok ? 0 : 1;
  };
  for (const MethodOutcome& o : ev.accounting_samples) check(o.accounting, o.method, o.k_used);
  for (const auto& [a, k_used] : pipeline_accounting) check(a, Method::kDiffGo, k_used);
  report(8, "bandwidth accounting", wrong == 0 && checked > 0,
         fmt("%zu records (diffgo extra=k_used, od extra=D=%zu, gesco extra=0, total=C+E+extra), %zu wrong", checked,
             dim, wrong));
}

void ablation_check(const Evaluation& ev) {
  std::size_t violations = 0;
  const std::size_t scenes = ev.truths.size();
  std::vector<double> mean_res(kAblationK.size(), 0.0);
  std::vector<double> miou(kAblationK.size(), 0.0);
  for (std::size_t i = 0; i < kAblationK.size(); ++i) {
    for (std::size_t s = 0; s < scenes; ++s) {
      mean_res[i] += ev.residuals[i][s] / scenes;
      if (i > 0 && ev.residuals[i][s] > ev.residuals[i - 1][s]) ++violations;
    }
    miou[i] = summarize(ev.truths, ev.ablation[i], {}).miou;
  }
  const bool ok = violations == 0 && miou[3] <= miou[0] + 0.02;
  report(9, "ablation trend", ok,
         fmt("residual k=1/8/32/128: %.3f/%.3f/%.3f/%.3f, %zu per-scene increases; miou %.4f/%.4f/%.4f/%.4f "
             "(k=128 <= k=1 + 0.02)",
             mean_res[0], mean_res[1], mean_res[2], mean_res[3], violations, miou[0], miou[1], miou[2], miou[3]));
}

void baseline_ordering(const Evaluation& ev) {
  const MetricSummary od = summarize(ev.truths, ev.od, {});
  const MetricSummary dg = summarize(ev.truths, ev.ablation.back(), {});
  const MetricSummary rn = summarize(ev.truths, ev.rn, {});
  const MetricSummary ge = summarize(ev.truths, ev.gesco, {});
  const bool fid_ok = od.toy_fid <= dg.toy_fid && dg.toy_fid <= rn.toy_fid + 0.05;
  const bool miou_ok = od.miou <= dg.miou && dg.miou <= rn.miou + 0.05;
  report(10, "baseline ordering", fid_ok && miou_ok,
         fmt("toy_fid od %.5f diffgo(128) %.5f rn %.5f; miou od %.4f diffgo(128) %.4f rn %.4f "
             "(gesco: toy_fid %.5f miou %.4f)",
             od.toy_fid, dg.toy_fid, rn.toy_fid, od.miou, dg.miou, rn.miou, ge.toy_fid, ge.miou));
}

// Seconds since the ctest fixture stamped the suite start, or since `self`
// when running standalone.
double suite_elapsed(Clock::time_point self, std::string* source) {
#ifdef DIFFGO_SUITE_STAMP
  namespace fs = std::filesystem;
  std::error_code ec;
  const auto stamp = fs::last_write_time(DIFFGO_SUITE_STAMP, ec);
  if (!ec) {
    const double age = std::chrono::duration<double>(fs::file_time_type::clock::now() - stamp).count();
    // A stale stamp means this binary was started outside ctest.
    if (age >= 0.0 && age < 3600.0 && age >= seconds_since(self)) {
      *source = "full ctest suite";
      return age;
    }
  }
#endif
  *source = "acceptance binary only";
  return seconds_since(self);
}

}  // namespace

int main() {
  const auto start = Clock::now();
  try {
    codec_determinism();
    projection_equivalence();
    span_recovery();
    const Schedule sched = make_linear_schedule();
    forward_moments(sched);
    wire_roundtrip();

    DatasetManifest manifest;
    for (std::uint64_t s = 1; s <= 200; ++s) manifest.scene_seeds.push_back(s);
    const std::vector<TrainExample> dataset = build_dataset(manifest);
    std::vector<std::uint64_t> basis_seeds(128);
    std::iota(basis_seeds.begin(), basis_seeds.end(), 1);
    const SeedBasis basis = SeedBasis::build(basis_seeds, 1024);
    const auto t_train = Clock::now();
    const TrainResult trained = train_diffgo(dataset, basis, sched, TrainConfig{});
    const LossSummary loss = summarize_losses(trained.losses);
    std::printf("info     trained on %zu scenes for %zu steps in %.1f s, loss %.4f -> %.4f\n", dataset.size(),
                trained.losses.size(), seconds_since(t_train), loss.initial, loss.final);

    gradient_check(trained.params, sched);

    const SharedModel shared{trained.params, basis, sched};
    double tau = 0.0;
    hierarchical_stop(shared, &tau);
    std::vector<std::pair<Accounting, std::size_t>> pipeline_accounting;
    end_to_end(trained.params, basis, sched, tau, &pipeline_accounting);
    const Evaluation ev = evaluate(shared);
    accounting_check(ev, pipeline_accounting, basis.dim());
    ablation_check(ev);
    baseline_ordering(ev);
  } catch (const std::exception& e) {
    std::printf("FAIL     aborted: %s\n", e.what());
    ++g_failures;
  }
  std::string source;
  const double total = suite_elapsed(start, &source);
  report(12, "suite runtime", total <= 900.0, fmt("%.1f s for the %s (limit 900 s)", total, source.c_str()));
  std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
  return g_failures == 0 ? 0 : 1;
}
