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

#ifndef DIFFGO_SCENES_H_
#define DIFFGO_SCENES_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "diffgo/bytes.h"
#include "diffgo/image.h"
#include "json.hpp"

namespace diffgo {

enum SceneClass : std::uint8_t {
  kBackground = 0,
  kRoad = 1,
  kVehicle = 2,
  kSign = 3,
};

inline constexpr int kNumSceneClasses = 4;

struct SceneConfig {
  int height = 32;
  int width = 32;
  int max_vehicles = 3;
  int max_signs = 2;
  double texture_scale = 0.05;
  // Base intensity per class, indexed by SceneClass.
  std::array<double, kNumSceneClasses> levels{-0.6, -0.2, 0.4, 0.8};
};

struct Scene {
  Image image;
  LabelMap labels;
  std::uint64_t seed = 0;
};

// Synthetic street scene: background, a horizontal road band, up to
// `max_vehicles` rectangles on the road and `max_signs` discs above it.
// Pure function of (seed, cfg).
Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg = {});

// bits[p] = 1 iff some in-bounds 4-neighbour of p has a different label.
EdgeMap extract_edges(const LabelMap& labels);

ConditionSet make_conditions(const LabelMap& labels);

// Flat inspection dump: f32 LE pixels, one byte per label, edge bits packed
// LSB-first.
Bytes dump_scene(const Scene& scene);

struct DatasetManifest {
  SceneConfig config;
  std::vector<std::uint64_t> scene_seeds;
};

void to_json(nlohmann::json& j, const SceneConfig& cfg);
void from_json(const nlohmann::json& j, SceneConfig& cfg);
void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

}  // namespace diffgo

#endif  // DIFFGO_SCENES_H_
