// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpt/common/error.hpp"
#include "cpt/protocol/message.hpp"

namespace cpt::proto {

enum class DecodeStatus
{
  ok,
  incomplete,      // not an error: more bytes are needed
  bad_magic,
  unknown_type,
  oversize,        // declared payload exceeds kMaxPayload
  length_mismatch, // payload fields do not fill exactly payload_len bytes
  malformed,       // a field holds an invalid value
  out_of_order,    // frame id did not increase on this connection direction
};

const char *to_string(DecodeStatus s);

class ProtocolError : public Error
{
 public:
  ProtocolError(DecodeStatus k, const std::string &what) : Error(what), kind(k) {}
  DecodeStatus kind;
};

// Canonical bytes of one framed message. Throws ProtocolError(oversize) when
// the payload would exceed kMaxPayload.
std::vector<std::uint8_t> encode(const Message &message);
void encode_into(const Message &message, std::vector<std::uint8_t> &out);

// Payload only (no envelope); the WebSocket endpoint ships FRAME_IMAGE this way.
std::vector<std::uint8_t> encode_payload(const Message &message);
// Throws ProtocolError on a malformed payload.
Message decode_payload(MsgType type, std::span<const std::uint8_t> payload);

struct DecodeResult
{
  DecodeStatus status = DecodeStatus::incomplete;
  std::optional<Message> message;
  std::size_t consumed = 0; // bytes of the frame, set when status == ok
  std::string detail;
};

// Decodes the first frame in `bytes`. Never throws.
DecodeResult decode(std::span<const std::uint8_t> bytes);

// Incremental stream splitter.
class FrameReader
{
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next complete message, nullopt if more bytes are needed. Throws
  // ProtocolError on a bad frame; the stream is unusable afterwards.
  std::optional<Message> next();
  std::size_t buffered() const { return buffer_.size() - start_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t start_ = 0;
};

// Enforces strictly increasing frame ids per message type for one direction
// of one connection.
class FrameOrderGuard
{
 public:
  // Throws ProtocolError(out_of_order).
  void check(const Message &message);

 private:
  std::array<std::optional<std::uint64_t>, 9> last_{};
};

} // namespace cpt::proto
