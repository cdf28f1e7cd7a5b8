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

#include "diffgo/scenes.h"

#include <algorithm>
#include <fstream>

#include "diffgo/error.h"
#include "diffgo/numerics.h"

namespace diffgo {
namespace {

constexpr std::uint64_t kLayoutStreamTag = 0x5CE4E1A7;

void paint_rect(LabelMap& m, int top, int left, int h, int w, std::uint8_t label) {
  for (int r = std::max(top, 0); r < std::min(top + h, m.height); ++r)
    for (int c = std::max(left, 0); c < std::min(left + w, m.width); ++c)
      m.labels[static_cast<std::size_t>(r) * m.width + c] = label;
}

void paint_disc(LabelMap& m, int cy, int cx, int radius, std::uint8_t label) {
  for (int r = cy - radius; r <= cy + radius; ++r) {
    for (int c = cx - radius; c <= cx + radius; ++c) {
      if (r < 0 || c < 0 || r >= m.height || c >= m.width) continue;
      const int dy = r - cy;
      const int dx = c - cx;
      if (dy * dy + dx * dx <= radius * radius)
        m.labels[static_cast<std::size_t>(r) * m.width + c] = label;
    }
  }
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  if (cfg.height < 8 || cfg.width < 8)
    throw Error(ErrorCode::kInvalidArgument, "generate_scene: canvas must be at least 8x8");
  const int h = cfg.height;
  const int w = cfg.width;
  SplitMix64 rng(derive_seed(seed, kLayoutStreamTag));
  auto uniform_int = [&rng](int lo, int hi) {
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  };

  Scene scene;
  scene.seed = seed;
  scene.labels = LabelMap{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, kBackground)};

  // Road band in the lower three quarters of the frame.
  const int road_h = uniform_int(std::max(2, h / 5), std::max(2, 2 * h / 5 - 1));
  const int road_top = uniform_int(h / 4, std::max(h / 4, h - road_h - 1));
  paint_rect(scene.labels, road_top, 0, road_h, w, kRoad);

  const int vehicles = uniform_int(0, cfg.max_vehicles);
  for (int i = 0; i < vehicles; ++i) {
    const int vw = uniform_int(std::max(2, w / 8), std::max(2, 9 * w / 32));
    const int vh = std::min(road_h, uniform_int(std::max(2, 3 * h / 32), std::max(2, 3 * h / 16)));
    const int left = uniform_int(0, w - vw);
    const int top = road_top + uniform_int(0, road_h - vh);
    paint_rect(scene.labels, top, left, vh, vw, kVehicle);
  }

  const int signs = uniform_int(0, cfg.max_signs);
  for (int i = 0; i < signs; ++i) {
    const int radius = uniform_int(2, 3);
    // Keep the disc strictly above the road.
    if (road_top - 2 * radius - 1 < 0) continue;
    const int cy = uniform_int(radius, road_top - radius - 1);
    const int cx = uniform_int(radius, w - radius - 1);
    paint_disc(scene.labels, cy, cx, radius, kSign);
  }

  const std::vector<float> texture = gaussian_stream(seed, static_cast<std::size_t>(h) * w);
  scene.image = Image{h, w, std::vector<float>(texture.size())};
  for (std::size_t p = 0; p < texture.size(); ++p) {
    const double v = cfg.levels[scene.labels.labels[p]] + cfg.texture_scale * texture[p];
    scene.image.pixels[p] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return scene;
}

EdgeMap extract_edges(const LabelMap& m) {
  EdgeMap e{m.height, m.width, std::vector<std::uint8_t>(m.size(), 0)};
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      const std::uint8_t v = m.at(r, c);
      const bool differs = (r > 0 && m.at(r - 1, c) != v) || (r + 1 < m.height && m.at(r + 1, c) != v) ||
                           (c > 0 && m.at(r, c - 1) != v) || (c + 1 < m.width && m.at(r, c + 1) != v);
      e.bits[static_cast<std::size_t>(r) * m.width + c] = differs ? 1 : 0;
    }
  }
  return e;
}

ConditionSet make_conditions(const LabelMap& labels) {
  return ConditionSet{labels, extract_edges(labels), kNumSceneClasses};
}

Bytes dump_scene(const Scene& scene) {
  ByteWriter out;
  for (float v : scene.image.pixels) out.f32(v);
  out.raw(scene.labels.labels);
  const EdgeMap edges = extract_edges(scene.labels);
  std::uint8_t acc = 0;
  for (std::size_t p = 0; p < edges.size(); ++p) {
    acc |= static_cast<std::uint8_t>(edges.bits[p] << (p % 8));
    if (p % 8 == 7) {
      out.u8(acc);
      acc = 0;
    }
  }
  if (edges.size() % 8 != 0) out.u8(acc);
  return out.take();
}

void to_json(nlohmann::json& j, const SceneConfig& cfg) {
  j = nlohmann::json{{"height", cfg.height},
                     {"width", cfg.width},
                     {"max_vehicles", cfg.max_vehicles},
                     {"max_signs", cfg.max_signs},
                     {"texture_scale", cfg.texture_scale},
                     {"levels", cfg.levels}};
}

void from_json(const nlohmann::json& j, SceneConfig& cfg) {
  cfg = SceneConfig{};
  cfg.height = j.value("height", cfg.height);
  cfg.width = j.value("width", cfg.width);
  cfg.max_vehicles = j.value("max_vehicles", cfg.max_vehicles);
  cfg.max_signs = j.value("max_signs", cfg.max_signs);
  cfg.texture_scale = j.value("texture_scale", cfg.texture_scale);
  if (j.contains("levels")) cfg.levels = j.at("levels").get<std::array<double, kNumSceneClasses>>();
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{{"scene_config", m.config}, {"scene_seeds", m.scene_seeds}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m.config = j.contains("scene_config") ? j.at("scene_config").get<SceneConfig>() : SceneConfig{};
  m.scene_seeds = j.at("scene_seeds").get<std::vector<std::uint64_t>>();
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path);
  return nlohmann::json::parse(in).get<DatasetManifest>();
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path);
  out << nlohmann::json(manifest).dump(2) << "\n";
}

}  // namespace diffgo
