// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpt/cluster/frame_stats.hpp"
#include "cpt/dist/distribution.hpp"
#include "cpt/net/tcp.hpp"
#include "cpt/protocol/message.hpp"

namespace cpt {

struct MasterOptions
{
  net::Endpoint listen{"127.0.0.1", 0};   // client TCP endpoint
  std::optional<net::Endpoint> ws_listen; // viewer WebSocket endpoint
  // One listening endpoint per worker slot; slot i serves participant i + 1.
  std::vector<net::Endpoint> workers;
  Strategy strategy = Strategy::stride;
  std::uint32_t width = 320;
  std::uint32_t height = 180;
  std::uint32_t spp = 1; // per participant
  std::uint32_t max_depth = kDefaultMaxDepth;
  Extent tile_size = kDefaultTileSize;
  std::uint64_t seed = 1;
  std::filesystem::path scene; // workers load the same scene name
  proto::ImageEncoding encoding = proto::ImageEncoding::png;
  int jpeg_quality = 85;
  bool denoise = false;
  std::optional<std::filesystem::path> stats_out;
  std::optional<std::uint64_t> frames; // stop after this many; until the client leaves otherwise
  unsigned threads = 0;                // local render threads; 0 = all cores
  std::size_t queue_capacity = 3;
  std::chrono::milliseconds startup_timeout{30000};
  // Floor of the per-frame worker wait; the wait is otherwise 10x the
  // rolling frame period.
  std::chrono::milliseconds min_frame_timeout{5000};
};

class MasterError : public Error
{
 public:
  using Error::Error;
};

// Master node. Principal threads: the thread calling run() (client events,
// forwarding, local rendering), one networking thread per worker and one
// post-processing thread (merge, denoise, tone map, encode, stream).
class Master
{
 public:
  // Loads the scene, plans the work and binds every listener, so ports are
  // known before run(). Throws on an infeasible plan or a busy port.
  explicit Master(MasterOptions options);
  ~Master();
  Master(const Master &) = delete;
  Master &operator=(const Master &) = delete;

  std::uint16_t client_port() const;
  std::optional<std::uint16_t> ws_port() const;
  std::vector<net::Endpoint> worker_endpoints() const;
  const WorkPlan &work_plan() const;

  // Blocks until the frame budget is met, the client leaves or stop() is
  // called, and returns the number of frames streamed. Any worker or
  // protocol failure aborts the whole cluster and is rethrown here.
  std::uint64_t run();
  // Thread-safe; run() finishes the frames already started.
  void stop();

  // Valid after run() returns.
  const std::vector<FrameStats> &stats() const;
  std::uint64_t scene_hash() const;
  std::uint64_t dropped_frames() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace cpt
