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

#include <cmath>

#include "diffgo/error.h"
#include "diffgo/protocol.h"

namespace diffgo {

Vec encode_latent(const Image& image, const Schedule& sched, std::uint64_t forward_seed) {
  const std::vector<float> eps = gaussian_stream(forward_seed, image.size());
  const Vec x0(image.pixels.begin(), image.pixels.end());
  return forward_diffuse(x0, sched.steps(), Vec(eps.begin(), eps.end()), sched);
}

Candidate evaluate_candidate(const WeightVector& full, std::size_t k, const ConditionSet& cond,
                             const Scene& truth, const SharedModel& shared, const GoalMetric& metric) {
  Candidate c;
  c.weights = truncate_topk(full, k);
  c.latent = reconstruct(c.weights, shared.basis);
  c.image = reverse_sample(shared.params, c.latent, cond, shared.sched);
  c.score = metric.score(c.image, truth);
  return c;
}

TransmitResult transmit_pipeline(const Scene& scene, const SharedModel& shared, const GoalMetric& metric,
                                 const TransmitConfig& cfg) {
  const std::size_t n = shared.basis.size();
  for (std::size_t i = 0; i < cfg.hierarchy.size(); ++i) {
    if (cfg.hierarchy[i] < 1 || cfg.hierarchy[i] >= n || (i > 0 && cfg.hierarchy[i] <= cfg.hierarchy[i - 1]))
      throw Error(ErrorCode::kInvalidArgument, "transmit: hierarchy must be strictly increasing in [1, n)");
  }

  TransmitResult result;
  const Vec x_t = encode_latent(scene.image, shared.sched, cfg.forward_seed);
  result.latent.assign(x_t.begin(), x_t.end());
  const ConditionSet cond = make_conditions(scene.labels);
  result.weights = Projector(shared.basis).solve_gd(x_t, cfg.projection);
  const WeightVector full = WeightVector::from_dense(result.weights);

  std::vector<std::size_t> ladder = cfg.hierarchy;
  ladder.push_back(n);
  Candidate chosen;
  for (std::size_t k : ladder) {
    chosen = evaluate_candidate(full, k, cond, scene, shared, metric);
    result.feedback.push_back({k, chosen.score.value});
    if (chosen.score.value <= cfg.tau) break;
  }
  // Falls through with the full-n candidate when nothing met the threshold.

  result.message.basis_fingerprint = shared.basis.fingerprint();
  result.message.weights = std::move(chosen.weights);
  result.message.conditions = cond;
  result.message.sampler = SamplerSpec{SamplerMode::kDeterministic, 0};
  result.accepted = std::move(chosen.image);
  return result;
}

Image receive_pipeline(const DiffGoMessage& msg, const SharedModel& shared) {
  if (msg.basis_fingerprint != shared.basis.fingerprint() || msg.weights.n != shared.basis.size())
    throw Error(ErrorCode::kBasisMismatch, "receive: message was built for a different basis");
  const std::vector<float> latent = reconstruct(msg.weights, shared.basis);
  return reverse_sample(shared.params, latent, msg.conditions, shared.sched, msg.sampler);
}

}  // namespace diffgo
