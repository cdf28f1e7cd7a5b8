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

#ifndef DIFFGO_IMAGE_H_
#define DIFFGO_IMAGE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace diffgo {

// Single-channel image, row-major, values nominally in [-1, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  std::size_t size() const { return pixels.size(); }
  friend bool operator==(const Image&, const Image&) = default;
};

// Segmentation labels, row-major, values in [0, num_classes).
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

// Binary edge map, one byte per pixel holding 0 or 1.
struct EdgeMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  friend bool operator==(const EdgeMap&, const EdgeMap&) = default;
};

// Side information the reverse process is conditioned on.
struct ConditionSet {
  LabelMap labels;
  EdgeMap edges;
  int num_classes = 4;

  friend bool operator==(const ConditionSet&, const ConditionSet&) = default;
};

}  // namespace diffgo

#endif  // DIFFGO_IMAGE_H_
