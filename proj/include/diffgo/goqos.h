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

#ifndef DIFFGO_GOQOS_H_
#define DIFFGO_GOQOS_H_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diffgo/image.h"
#include "diffgo/numerics.h"
#include "diffgo/scenes.h"

namespace diffgo {

// All scores are lower-is-better and non-negative.
struct MetricScore {
  double value = 0.0;
  std::string metric_id;
};

struct LabeledImage {
  Image image;
  LabelMap labels;
};

// (mean, stddev, edge density, fraction of labels 1, 2, 3) over one patch.
inline constexpr std::size_t kPatchFeatureDim = 6;
using PatchFeature = std::array<double, kPatchFeatureDim>;

inline constexpr int kPatchSize = 8;
inline constexpr int kPatchStride = 4;
inline constexpr double kCovarianceRidge = 1e-6;

std::vector<PatchFeature> patch_features(const LabeledImage& sample);

struct GaussianFit {
  Vec mean;
  SymMatrix cov;
};

// Mean and unbiased covariance plus `ridge` * I. Needs at least two rows.
GaussianFit fit_gaussian(std::span<const std::vector<double>> rows, double ridge = kCovarianceRidge);

// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 sqrtm(S1^1/2 S2 S1^1/2)).
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

// Frechet distance between Gaussian fits of the patch features of each set.
// Throws insufficient-data unless each set yields >= 2 * kPatchFeatureDim patches.
MetricScore toy_fid(std::span<const LabeledImage> set_a, std::span<const LabeledImage> set_b);

// 1 - |a & b| / |a | b|, 0 when both maps are empty.
MetricScore edge_iou(const EdgeMap& a, const EdgeMap& b);

// Nearest-base-level segmentation (thresholds at midpoints of the levels).
LabelMap segment_by_levels(const Image& image, const SceneConfig& cfg = {});

// 1 - mean IoU over the classes present in `truth`, after segmenting `image_hat`.
MetricScore downstream_miou(const Image& image_hat, const LabelMap& truth, const SceneConfig& cfg = {});

MetricScore rmse(const Image& a, const Image& b);

// GO-QoS metric used by local generative feedback: scores a candidate
// reconstruction against the transmitter's ground-truth scene.
struct GoalMetric {
  std::string id;
  std::function<MetricScore(const Image& candidate, const Scene& truth)> score;
};

// Known ids: "toy_fid", "edge_iou", "miou", "rmse".
GoalMetric make_goal_metric(const std::string& id, const SceneConfig& cfg = {});
std::vector<std::string> goal_metric_ids();

// CSV row "metric_id,value,k,scene_seed" (no trailing newline).
std::string format_metric_row(const MetricScore& score, std::size_t k, std::uint64_t scene_seed);
inline constexpr const char* kMetricCsvHeader = "metric_id,value,k,scene_seed";

}  // namespace diffgo

#endif  // DIFFGO_GOQOS_H_
