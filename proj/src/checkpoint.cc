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

#include <bit>
#include <fstream>
#include <iterator>

#include "diffgo/diffusion.h"
#include "diffgo/error.h"

namespace diffgo {
namespace {

constexpr char kCheckpointMagic[] = "DGM1";
// magic + 5 x u32 dims + 2 x f64 betas + u64 seed + u64 count
constexpr std::size_t kCheckpointHeaderBytes = 4 + 20 + 16 + 16;

}  // namespace

Bytes encode_checkpoint(const DenoiserParams& params) {
  ByteWriter w;
  w.tag(kCheckpointMagic);
  w.u32(static_cast<std::uint32_t>(params.shape.dim));
  w.u32(static_cast<std::uint32_t>(params.shape.time_dim));
  w.u32(static_cast<std::uint32_t>(params.shape.hidden));
  w.u32(static_cast<std::uint32_t>(params.shape.num_classes));
  w.u32(static_cast<std::uint32_t>(params.shape.steps));
  w.u64(std::bit_cast<std::uint64_t>(params.shape.beta_start));
  w.u64(std::bit_cast<std::uint64_t>(params.shape.beta_end));
  w.u64(params.init_seed);
  w.u64(params.parameter_count());
  for (auto t : params.tensors())
    for (double v : t) w.f32(static_cast<float>(v));
  w.u32(crc32(w.bytes()));
  return w.take();
}

DenoiserParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCheckpointHeaderBytes + 4)
    throw Error(ErrorCode::kMalformedMessage, "checkpoint: file too short");
  if (std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != kCheckpointMagic)
    throw Error(ErrorCode::kUnsupportedFormat, "checkpoint: bad magic");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader trailer(bytes.last(4));
  if (crc32(body) != trailer.u32()) throw Error(ErrorCode::kCorruptMessage, "checkpoint: CRC mismatch");

  ByteReader r(body);
  r.take(4);
  DenoiserShape shape;
  shape.dim = r.u32();
  shape.time_dim = r.u32();
  shape.hidden = r.u32();
  shape.num_classes = r.u32();
  shape.steps = r.u32();
  shape.beta_start = std::bit_cast<double>(r.u64());
  shape.beta_end = std::bit_cast<double>(r.u64());
  const std::uint64_t seed = r.u64();
  const std::uint64_t count = r.u64();

  DenoiserParams p = DenoiserParams::zeros(shape);
  p.init_seed = seed;
  if (count != p.parameter_count() || r.remaining() != 4 * count)
    throw Error(ErrorCode::kMalformedMessage, "checkpoint: parameter count does not match header dims");
  for (auto t : p.tensors())
    for (double& v : t) v = r.f32();
  return p;
}

void save_checkpoint(const DenoiserParams& params, const std::string& path) {
  const Bytes bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DenoiserParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path);
  const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace diffgo
