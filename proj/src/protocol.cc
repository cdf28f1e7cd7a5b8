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

#include "diffgo/protocol.h"

#include <cmath>
#include <limits>

#include "diffgo/error.h"

namespace diffgo {
namespace {

constexpr char kWireMagic[] = "DGO1";
constexpr std::uint32_t kMaxRun = std::numeric_limits<std::uint16_t>::max();
// header + H, W, L + CRC, i.e. an empty canvas with no weights
constexpr std::size_t kMinMessageBytes = kWireHeaderBytes + 5 + 4;

void write_label_runs(ByteWriter& w, const LabelMap& m) {
  std::size_t p = 0;
  while (p < m.size()) {
    const std::uint8_t label = m.labels[p];
    std::size_t q = p;
    while (q < m.size() && m.labels[q] == label && q - p < kMaxRun) ++q;
    w.u8(label);
    w.u16(static_cast<std::uint16_t>(q - p));
    p = q;
  }
}

void write_edge_runs(ByteWriter& w, const EdgeMap& e) {
  std::uint8_t symbol = 0;
  std::size_t p = 0;
  while (p < e.size()) {
    std::size_t q = p;
    while (q < e.size() && e.bits[q] == symbol && q - p < kMaxRun) ++q;
    w.u16(static_cast<std::uint16_t>(q - p));
    p = q;
    symbol ^= 1;
  }
}

}  // namespace

bool operator==(const DiffGoMessage& a, const DiffGoMessage& b) {
  return a.basis_fingerprint == b.basis_fingerprint && a.weights == b.weights && a.conditions == b.conditions &&
         a.sampler.mode == b.sampler.mode && a.sampler.nonce == b.sampler.nonce;
}

Bytes encode_message(const DiffGoMessage& msg) {
  const ConditionSet& cond = msg.conditions;
  if (cond.labels.height != cond.edges.height || cond.labels.width != cond.edges.width ||
      cond.labels.size() != static_cast<std::size_t>(cond.labels.height) * cond.labels.width ||
      cond.edges.size() != cond.labels.size())
    throw Error(ErrorCode::kInvalidArgument, "encode_message: inconsistent condition maps");
  if (cond.labels.height > 0xFFFF || cond.labels.width > 0xFFFF || cond.num_classes < 1 || cond.num_classes > 255)
    throw Error(ErrorCode::kInvalidArgument, "encode_message: condition dimensions out of range");

  ByteWriter w;
  w.tag(kWireMagic);
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(msg.sampler.mode));
  w.u64(msg.basis_fingerprint);
  w.u64(msg.sampler.nonce);
  w.u32(msg.weights.n);
  w.u32(static_cast<std::uint32_t>(msg.weights.entries.size()));
  for (const auto& e : msg.weights.entries) {
    w.u32(e.index);
    w.f32(e.value);
  }
  w.u16(static_cast<std::uint16_t>(cond.labels.height));
  w.u16(static_cast<std::uint16_t>(cond.labels.width));
  w.u8(static_cast<std::uint8_t>(cond.num_classes));
  write_label_runs(w, cond.labels);
  write_edge_runs(w, cond.edges);
  w.u32(crc32(w.bytes()));
  return w.take();
}

DiffGoMessage decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMinMessageBytes) throw Error(ErrorCode::kMalformedMessage, "message truncated");
  const auto body = bytes.first(bytes.size() - 4);
  if (crc32(body) != ByteReader(bytes.last(4)).u32())
    throw Error(ErrorCode::kCorruptMessage, "CRC mismatch");

  ByteReader r(body);
  if (std::string_view(reinterpret_cast<const char*>(r.take(4).data()), 4) != kWireMagic)
    throw Error(ErrorCode::kUnsupportedFormat, "bad magic");
  if (r.u8() != kWireVersion) throw Error(ErrorCode::kUnsupportedFormat, "unsupported version");

  DiffGoMessage msg;
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw Error(ErrorCode::kMalformedMessage, "unknown sampler mode");
  msg.sampler.mode = static_cast<SamplerMode>(mode);
  msg.basis_fingerprint = r.u64();
  msg.sampler.nonce = r.u64();
  msg.weights.n = r.u32();
  const std::uint32_t k = r.u32();
  if (k > msg.weights.n) throw Error(ErrorCode::kMalformedMessage, "k exceeds n");
  if (r.remaining() < static_cast<std::size_t>(k) * 8) throw Error(ErrorCode::kMalformedMessage, "weights truncated");
  msg.weights.entries.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    WeightEntry e;
    e.index = r.u32();
    e.value = r.f32();
    if (e.index >= msg.weights.n) throw Error(ErrorCode::kMalformedMessage, "weight index out of range");
    if (!msg.weights.entries.empty() && e.index <= msg.weights.entries.back().index)
      throw Error(ErrorCode::kMalformedMessage, "weight indices not strictly increasing");
    if (!std::isfinite(e.value)) throw Error(ErrorCode::kMalformedMessage, "non-finite weight");
    msg.weights.entries.push_back(e);
  }

  const int h = r.u16();
  const int w = r.u16();
  const int classes = r.u8();
  if (classes < 1) throw Error(ErrorCode::kMalformedMessage, "zero label classes");
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  ConditionSet& cond = msg.conditions;
  cond.num_classes = classes;
  cond.labels = LabelMap{h, w, {}};
  cond.labels.labels.reserve(pixels);
  while (cond.labels.size() < pixels) {
    const std::uint8_t label = r.u8();
    const std::uint16_t len = r.u16();
    if (label >= classes) throw Error(ErrorCode::kMalformedMessage, "label out of range");
    if (len == 0 || cond.labels.size() + len > pixels)
      throw Error(ErrorCode::kMalformedMessage, "bad label run length");
    cond.labels.labels.insert(cond.labels.labels.end(), len, label);
  }
  cond.edges = EdgeMap{h, w, {}};
  cond.edges.bits.reserve(pixels);
  std::uint8_t symbol = 0;
  while (cond.edges.size() < pixels) {
    const std::uint16_t len = r.u16();
    if (cond.edges.size() + len > pixels) throw Error(ErrorCode::kMalformedMessage, "bad edge run length");
    cond.edges.bits.insert(cond.edges.bits.end(), len, symbol);
    symbol ^= 1;
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kMalformedMessage, "trailing bytes");
  return msg;
}

// ---------------------------------------------------------------------------

const char* method_name(Method m) {
  switch (m) {
    case Method::kDiffGo: return "diffgo";
    case Method::kOd: return "od";
    case Method::kRn: return "rn";
    case Method::kGesco: return "gesco";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::kDiffGo, Method::kOd, Method::kRn, Method::kGesco})
    if (name == method_name(m)) return m;
  return std::nullopt;
}

Accounting floats_transmitted(const DiffGoMessage& msg, Method method) {
  const std::size_t pixels = msg.conditions.labels.size();
  Accounting a;
  a.method = method;
  a.condition_floats = static_cast<double>(pixels);
  a.edge_floats = static_cast<double>(pixels) / 32.0;

  // Variants of the message carrying only what each method sends.
  DiffGoMessage conditions_only = msg;
  conditions_only.weights.entries.clear();

  switch (method) {
    case Method::kDiffGo:
      a.extra_floats = static_cast<double>(msg.k_used());
      a.wire_bytes = encode_message(msg).size();
      a.pattern = "C+E+" + std::to_string(msg.k_used());
      break;
    case Method::kOd:
      // The full latent has one value per pixel and is sent raw.
      a.extra_floats = static_cast<double>(pixels);
      a.wire_bytes = encode_message(conditions_only).size() + 4 * pixels;
      a.pattern = "C+E+" + std::to_string(pixels);
      break;
    case Method::kRn:
      a.wire_bytes = encode_message(conditions_only).size();
      a.pattern = "C+E";
      break;
    case Method::kGesco:
      a.edge_floats = 0.0;
      std::fill(conditions_only.conditions.edges.bits.begin(), conditions_only.conditions.edges.bits.end(), 0);
      a.wire_bytes = encode_message(conditions_only).size();
      a.pattern = "C";
      break;
  }
  a.total_floats = a.condition_floats + a.edge_floats + a.extra_floats;
  return a;
}

}  // namespace diffgo
