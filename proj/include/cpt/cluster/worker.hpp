// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>

#include "cpt/net/tcp.hpp"
#include "cpt/pipeline/pipeline.hpp"
#include "cpt/protocol/message.hpp"

namespace cpt {

struct WorkerOptions
{
  net::Endpoint connect{"127.0.0.1", 0};
  std::filesystem::path scene_dir;
  unsigned threads = 0; // render threads; 0 = all cores
  std::uint32_t node_id = 0;
  std::size_t queue_capacity = 3;
  std::chrono::milliseconds connect_timeout{30000};
  // Protocol version announced in HELLO; tests override it.
  std::uint16_t protocol_version = proto::kProtocolVersion;
};

struct WorkerSummary
{
  proto::Config config;
  std::uint64_t frames_rendered = 0;
  std::uint64_t scene_hash = 0; // scene state after the last frame
  std::uint64_t bytes_sent = 0;
  // Why the session ended: "done" after a regular SHUTDOWN, otherwise a
  // diagnostic (connection loss, refused handshake, render failure).
  std::string end_reason;
  bool clean = false;
  // Timeline of the first kTimelineFrames frames: rendering on the main
  // thread, transmission on the networking thread, and the size of each
  // RADIANCE_BUFFER frame.
  static constexpr std::size_t kTimelineFrames = 4096;
  std::vector<Interval> render_intervals;
  std::vector<Interval> send_intervals;
  std::vector<std::size_t> radiance_frame_bytes;
};

class WorkerError : public Error
{
 public:
  using Error::Error;
};

// Worker node. The calling thread is the main thread: it applies
// master-forwarded scene updates and renders the assigned share of each
// frame. A networking thread ships finished buffers back, so frame n is
// transmitted while frame n + 1 renders. Throws WorkerError when the
// handshake fails (version mismatch, unknown scene, no master).
WorkerSummary run_worker(const WorkerOptions &options);

} // namespace cpt
