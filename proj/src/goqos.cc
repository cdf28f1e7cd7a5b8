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

#include "diffgo/goqos.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "diffgo/error.h"

namespace diffgo {

std::vector<PatchFeature> patch_features(const LabeledImage& sample) {
  const Image& img = sample.image;
  const LabelMap& labels = sample.labels;
  if (img.height != labels.height || img.width != labels.width || img.size() != labels.size())
    throw Error(ErrorCode::kInvalidArgument, "patch_features: image and labels not aligned");
  const EdgeMap edges = extract_edges(labels);

  std::vector<PatchFeature> out;
  const double area = kPatchSize * kPatchSize;
  for (int top = 0; top + kPatchSize <= img.height; top += kPatchStride) {
    for (int left = 0; left + kPatchSize <= img.width; left += kPatchStride) {
      double sum = 0.0;
      double edge = 0.0;
      std::array<double, 4> frac{};
      for (int r = top; r < top + kPatchSize; ++r) {
        for (int c = left; c < left + kPatchSize; ++c) {
          const std::size_t p = static_cast<std::size_t>(r) * img.width + c;
          sum += img.pixels[p];
          edge += edges.bits[p];
          const std::uint8_t l = labels.labels[p];
          if (l >= 1 && l <= 3) frac[l] += 1.0;
        }
      }
      const double mean = sum / area;
      double var = 0.0;
      for (int r = top; r < top + kPatchSize; ++r)
        for (int c = left; c < left + kPatchSize; ++c) {
          const double d = img.pixels[static_cast<std::size_t>(r) * img.width + c] - mean;
          var += d * d;
        }
      out.push_back({mean, std::sqrt(var / area), edge / area, frac[1] / area, frac[2] / area, frac[3] / area});
    }
  }
  return out;
}

GaussianFit fit_gaussian(std::span<const std::vector<double>> rows, double ridge) {
  if (rows.size() < 2) throw Error(ErrorCode::kInsufficientData, "fit_gaussian: need at least two samples");
  const std::size_t d = rows.front().size();
  GaussianFit fit{Vec(d, 0.0), SymMatrix(d)};
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) fit.mean[i] += r[i];
  for (double& m : fit.mean) m /= static_cast<double>(rows.size());

  Matrix acc(d, d);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) acc(i, j) += (r[i] - fit.mean[i]) * (r[j] - fit.mean[j]);
  const double denom = static_cast<double>(rows.size() - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) fit.cov.set(i, j, acc(i, j) / denom + (i == j ? ridge : 0.0));
  return fit;
}

namespace {

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

}  // namespace

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  const std::size_t d = a.mean.size();
  if (b.mean.size() != d) throw Error(ErrorCode::kInvalidArgument, "frechet_distance: dimension mismatch");
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);

  const SymMatrix root_a = sqrtm_psd(a.cov);
  const Matrix ra = root_a.to_matrix();
  const SymMatrix inner = SymMatrix::from_matrix(matmul(matmul(ra, b.cov.to_matrix()), ra));
  const SymMatrix cross = sqrtm_psd(inner);

  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += a.cov(i, i) + b.cov(i, i) - 2.0 * cross(i, i);
  return std::max(0.0, mean_term + trace);
}

MetricScore toy_fid(std::span<const LabeledImage> set_a, std::span<const LabeledImage> set_b) {
  auto collect = [](std::span<const LabeledImage> set) {
    std::vector<std::vector<double>> rows;
    for (const auto& s : set)
      for (const auto& f : patch_features(s)) rows.emplace_back(f.begin(), f.end());
    if (rows.size() < 2 * kPatchFeatureDim)
      throw Error(ErrorCode::kInsufficientData, "toy_fid: too few patch features");
    return rows;
  };
  const auto rows_a = collect(set_a);
  const auto rows_b = collect(set_b);
  return {frechet_distance(fit_gaussian(rows_a), fit_gaussian(rows_b)), "toy_fid"};
}

MetricScore edge_iou(const EdgeMap& a, const EdgeMap& b) {
  if (a.height != b.height || a.width != b.width || a.size() != b.size())
    throw Error(ErrorCode::kInvalidArgument, "edge_iou: shape mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    inter += (a.bits[p] && b.bits[p]) ? 1 : 0;
    uni += (a.bits[p] || b.bits[p]) ? 1 : 0;
  }
  const double value = uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
  return {value, "edge_iou"};
}

LabelMap segment_by_levels(const Image& image, const SceneConfig& cfg) {
  LabelMap out{image.height, image.width, std::vector<std::uint8_t>(image.size(), 0)};
  for (std::size_t p = 0; p < image.size(); ++p) {
    std::uint8_t label = 0;
    for (int c = 1; c < kNumSceneClasses; ++c)
      if (image.pixels[p] >= 0.5 * (cfg.levels[c - 1] + cfg.levels[c])) label = static_cast<std::uint8_t>(c);
    out.labels[p] = label;
  }
  return out;
}

MetricScore downstream_miou(const Image& image_hat, const LabelMap& truth, const SceneConfig& cfg) {
  if (image_hat.size() != truth.size()) throw Error(ErrorCode::kInvalidArgument, "downstream_miou: shape mismatch");
  const LabelMap pred = segment_by_levels(image_hat, cfg);
  std::array<std::size_t, 256> inter{};
  std::array<std::size_t, 256> pred_count{};
  std::array<std::size_t, 256> truth_count{};
  for (std::size_t p = 0; p < truth.size(); ++p) {
    ++pred_count[pred.labels[p]];
    ++truth_count[truth.labels[p]];
    if (pred.labels[p] == truth.labels[p]) ++inter[truth.labels[p]];
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < truth_count.size(); ++c) {
    if (truth_count[c] == 0) continue;
    const std::size_t uni = pred_count[c] + truth_count[c] - inter[c];
    sum += static_cast<double>(inter[c]) / static_cast<double>(uni);
    ++present;
  }
  const double miou = present == 0 ? 1.0 : sum / present;
  return {1.0 - miou, "miou"};
}

MetricScore rmse(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width || a.size() != b.size())
    throw Error(ErrorCode::kInvalidArgument, "rmse: shape mismatch");
  if (a.size() == 0) return {0.0, "rmse"};
  double acc = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double d = static_cast<double>(a.pixels[p]) - static_cast<double>(b.pixels[p]);
    acc += d * d;
  }
  return {std::sqrt(acc / static_cast<double>(a.size())), "rmse"};
}

GoalMetric make_goal_metric(const std::string& id, const SceneConfig& cfg) {
  if (id == "toy_fid") {
    return {id, [cfg](const Image& candidate, const Scene& truth) {
              const LabeledImage a{candidate, segment_by_levels(candidate, cfg)};
              const LabeledImage b{truth.image, segment_by_levels(truth.image, cfg)};
              return toy_fid(std::span(&a, 1), std::span(&b, 1));
            }};
  }
  if (id == "edge_iou") {
    return {id, [cfg](const Image& candidate, const Scene& truth) {
              return edge_iou(extract_edges(segment_by_levels(candidate, cfg)), extract_edges(truth.labels));
            }};
  }
  if (id == "miou") {
    return {id, [cfg](const Image& candidate, const Scene& truth) {
              return downstream_miou(candidate, truth.labels, cfg);
            }};
  }
  if (id == "rmse") {
    return {id, [](const Image& candidate, const Scene& truth) { return rmse(candidate, truth.image); }};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown metric id '" + id + "'");
}

std::vector<std::string> goal_metric_ids() { return {"toy_fid", "edge_iou", "miou", "rmse"}; }

std::string format_metric_row(const MetricScore& score, std::size_t k, std::uint64_t scene_seed) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%.9g,%zu,%llu", score.metric_id.c_str(), score.value, k,
                static_cast<unsigned long long>(scene_seed));
  return buf;
}

}  // namespace diffgo
