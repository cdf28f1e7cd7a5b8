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

#include <istream>
#include <ostream>

#include "diffgo/error.h"
#include "diffgo/protocol.h"

namespace diffgo {
namespace {

void check_frame_size(std::size_t n) {
  if (n > kMaxFrameBytes) throw Error(ErrorCode::kFrameTooLarge, "frame exceeds 16 MiB");
}

}  // namespace

void InMemoryTransport::send(std::span<const std::uint8_t> payload) {
  check_frame_size(payload.size());
  std::lock_guard lock(mu_);
  queue_.emplace_back(payload.begin(), payload.end());
}

std::optional<Bytes> InMemoryTransport::receive() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  Bytes out = std::move(queue_.front());
  queue_.pop_front();
  return out;
}

void FramedStreamTransport::send(std::span<const std::uint8_t> payload) {
  check_frame_size(payload.size());
  const auto n = static_cast<std::uint32_t>(payload.size());
  const char prefix[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                          static_cast<char>(n)};
  stream_.write(prefix, 4);
  stream_.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  stream_.flush();
  if (!stream_) throw Error(ErrorCode::kIo, "frame write failed");
}

std::optional<Bytes> FramedStreamTransport::receive() {
  unsigned char prefix[4];
  stream_.read(reinterpret_cast<char*>(prefix), 4);
  const std::streamsize got = stream_.gcount();
  if (got == 0 && stream_.eof()) {
    stream_.clear();
    return std::nullopt;
  }
  if (got != 4) throw Error(ErrorCode::kTruncatedFrame, "stream ended inside a length prefix");
  const std::uint32_t n = (std::uint32_t{prefix[0]} << 24) | (std::uint32_t{prefix[1]} << 16) |
                          (std::uint32_t{prefix[2]} << 8) | std::uint32_t{prefix[3]};
  check_frame_size(n);
  Bytes payload(n);
  stream_.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::uint32_t>(stream_.gcount()) != n)
    throw Error(ErrorCode::kTruncatedFrame, "stream ended inside a frame payload");
  return payload;
}

}  // namespace diffgo
