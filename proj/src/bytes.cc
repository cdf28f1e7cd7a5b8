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

#include "diffgo/bytes.h"

#include <algorithm>

#include <zlib.h>

namespace diffgo {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kSingularMatrix: return "singular-matrix";
    case ErrorCode::kNotPsd: return "not-psd";
    case ErrorCode::kDegenerateBasis: return "degenerate-basis";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kBasisMismatch: return "basis-mismatch";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kCorruptMessage: return "corrupt-message";
    case ErrorCode::kMalformedMessage: return "malformed-message";
    case ErrorCode::kFrameTooLarge: return "frame-too-large";
    case ErrorCode::kTruncatedFrame: return "truncated-frame";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  // zlib's crc32 is the reflected IEEE polynomial; feed in chunks since its
  // length argument is a uInt.
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < data.size()) {
    const std::size_t chunk = std::min<std::size_t>(data.size() - offset, 1u << 30);
    crc = ::crc32(crc, data.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace diffgo
