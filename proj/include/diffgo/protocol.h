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

#ifndef DIFFGO_PROTOCOL_H_
#define DIFFGO_PROTOCOL_H_

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diffgo/bytes.h"
#include "diffgo/diffusion.h"
#include "diffgo/goqos.h"
#include "diffgo/image.h"
#include "diffgo/noise_codec.h"
#include "diffgo/scenes.h"

namespace diffgo {

// What crosses the channel: sparse basis weights plus the conditions.
struct DiffGoMessage {
  std::uint64_t basis_fingerprint = 0;
  WeightVector weights;
  ConditionSet conditions;
  SamplerSpec sampler;

  std::size_t k_used() const { return weights.entries.size(); }
};

bool operator==(const DiffGoMessage& a, const DiffGoMessage& b);

// Wire layout (little-endian):
//   "DGO1" | version u8 | sampler u8 | fingerprint u64 | nonce u64 | n u32 | k u32
//   | k x (index u32, value f32) | H u16 | W u16 | L u8
//   | label runs (label u8, length u16) | edge runs u16 alternating from 0 | CRC32
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderBytes = 30;

Bytes encode_message(const DiffGoMessage& msg);

// The CRC is checked first so that any single corrupted byte is reported as
// corrupt-message; then magic/version (unsupported-format), then structure
// (malformed-message). Buffers too short to hold any message are malformed.
DiffGoMessage decode_message(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Transmitter / receiver
// ---------------------------------------------------------------------------

struct FeedbackEntry {
  std::size_t k = 0;
  double score = 0.0;
};

struct TransmitConfig {
  double tau = 0.0;
  std::vector<std::size_t> hierarchy;  // strictly increasing, last < n
  std::uint64_t forward_seed = 0;
  GdConfig projection;
};

struct TransmitResult {
  DiffGoMessage message;
  std::vector<FeedbackEntry> feedback;
  Image accepted;           // the local candidate the receiver will reproduce
  std::vector<float> latent;  // forward-diffused x_T (before projection)
  Vec weights;              // full projection before truncation
};

// Everything shared by both endpoints ahead of time.
struct SharedModel {
  const DenoiserParams& params;
  const SeedBasis& basis;
  const Schedule& sched;
};

// x_T of a scene under a pinned forward-noise seed.
Vec encode_latent(const Image& image, const Schedule& sched, std::uint64_t forward_seed);

struct Candidate {
  WeightVector weights;
  std::vector<float> latent;  // reconstructed x_T
  Image image;
  MetricScore score;
};

// One pass of the feedback loop: keep the top-k weights, rebuild the latent,
// run the reverse process and score the result.
Candidate evaluate_candidate(const WeightVector& full, std::size_t k, const ConditionSet& cond,
                             const Scene& truth, const SharedModel& shared, const GoalMetric& metric);

// Hierarchical weight sharing with local generative feedback: tries each k in
// the hierarchy and then n, stopping at the first candidate scoring <= tau.
TransmitResult transmit_pipeline(const Scene& scene, const SharedModel& shared, const GoalMetric& metric,
                                 const TransmitConfig& cfg);

// Throws basis-mismatch when the message was produced against another basis.
Image receive_pipeline(const DiffGoMessage& msg, const SharedModel& shared);

// ---------------------------------------------------------------------------
// Bandwidth accounting
// ---------------------------------------------------------------------------

enum class Method { kDiffGo, kOd, kRn, kGesco };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct Accounting {
  Method method = Method::kDiffGo;
  double condition_floats = 0.0;  // C: one symbol per pixel
  double edge_floats = 0.0;       // E: H*W bits as 32-bit float equivalents
  double extra_floats = 0.0;      // latent payload
  double total_floats = 0.0;
  std::size_t wire_bytes = 0;     // bytes actually sent
  std::string pattern;            // e.g. "C+E+100"
};

Accounting floats_transmitted(const DiffGoMessage& msg, Method method);

// ---------------------------------------------------------------------------
// Transport: u32 big-endian length prefix + payload, one message per frame.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxFrameBytes = 16u << 20;

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::span<const std::uint8_t> payload) = 0;
  // nullopt when no frame is pending (in-memory) or the stream ended cleanly
  // on a frame boundary.
  virtual std::optional<Bytes> receive() = 0;
};

class InMemoryTransport final : public Transport {
 public:
  void send(std::span<const std::uint8_t> payload) override;
  std::optional<Bytes> receive() override;

 private:
  std::mutex mu_;
  std::deque<Bytes> queue_;
};

class FramedStreamTransport final : public Transport {
 public:
  explicit FramedStreamTransport(std::iostream& stream) : stream_(stream) {}
  void send(std::span<const std::uint8_t> payload) override;
  std::optional<Bytes> receive() override;

 private:
  std::iostream& stream_;
};

}  // namespace diffgo

#endif  // DIFFGO_PROTOCOL_H_
