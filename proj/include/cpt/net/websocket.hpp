// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpt/net/tcp.hpp"
#include "cpt/protocol/message.hpp"

namespace cpt::net {

// Viewer camera event as JSON text:
//   {"frame_id": n, "position": [x,y,z], "look_at": [x,y,z], "up": [x,y,z], "fov": deg}
// Throws StructuralError on a missing or mistyped field.
proto::CameraEvent parse_camera_event_json(const std::string &text);
std::string camera_event_json(const proto::CameraEvent &event);

// STATS as a JSON text frame: {"type": "stats", "frame_id": n, "fields": {name: ms, ...}}.
std::string stats_json(const proto::Stats &stats);

// WebSocket endpoint for the browser viewer. Serves one viewer at a time; a
// new connection replaces the previous one. Downstream binary frames carry
// FRAME_IMAGE payloads (no envelope), text frames carry STATS JSON; upstream
// text frames carry camera events. All socket work happens on one internal
// I/O thread; camera events reach the caller through a single-consumer queue.
class WsServer
{
 public:
  explicit WsServer(const Endpoint &endpoint);
  ~WsServer();
  WsServer(const WsServer &) = delete;
  WsServer &operator=(const WsServer &) = delete;

  std::uint16_t port() const;
  bool connected() const;
  // Total viewer connections accepted so far.
  std::uint64_t sessions() const;
  // Upstream messages that were not valid camera events.
  std::uint64_t rejected_events() const;

  // Single consumer. nullopt if no event arrives within `timeout`.
  std::optional<proto::CameraEvent> next_event(std::chrono::milliseconds timeout);

  // Thread-safe. Dropped when no viewer is connected. When the viewer falls
  // behind, the oldest unsent binary frames are discarded.
  void send_frame(const proto::FrameImage &frame);
  void send_text(std::string text);

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace cpt::net
