// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpt/cluster/camera_path.hpp"
#include "cpt/cluster/frame_stats.hpp"
#include "cpt/net/tcp.hpp"
#include "cpt/protocol/message.hpp"
#include "cpt/render/radiance_buffer.hpp"

namespace cpt {

struct ClientOptions
{
  net::Endpoint connect{"127.0.0.1", 0};
  std::uint64_t frames = 1;
  // Defaults to holding the pose the master announces.
  std::optional<CameraPath> path;
  // Without a path: orbit this many degrees over the run, starting from the
  // announced pose.
  std::optional<float> orbit_degrees;
  std::optional<std::filesystem::path> dump_dir;
  // RMSE of every radiance-encoded frame against this buffer.
  std::optional<RadianceBuffer> reference;
  bool keep_frames = false; // keep encoded bytes in the report
  bool keep_radiance = false; // keep decoded radiance frames in the report
  // Camera events in flight. 2 sends event n + 1 when frame n - 1 arrives.
  std::uint32_t window = 2;
  std::uint32_t node_id = 0;
  std::chrono::milliseconds connect_timeout{30000};
  std::chrono::milliseconds frame_timeout{120000};
};

struct ReceivedFrame
{
  std::uint64_t frame_id = 0;
  double sent_s = 0;     // camera event send time, seconds since run start
  double received_s = 0; // FRAME_IMAGE receive time
  proto::ImageEncoding encoding = proto::ImageEncoding::raw_rgb8;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::size_t byte_count = 0;
  std::vector<std::uint8_t> bytes; // when keep_frames
  std::optional<RadianceBuffer> radiance; // when keep_radiance
  std::optional<double> rmse;

  double latency_ms() const { return (received_s - sent_s) * 1000.0; }
};

struct RunReport
{
  proto::Config config;
  std::vector<ReceivedFrame> frames; // in arrival order
  std::vector<FrameStats> stats;     // echoed master STATS
  double fps = 0; // (frames - 1) / (last - first receive time)
  bool partial = false;
  std::string error;
  std::string shutdown_reason;
  std::uint32_t principal_threads = 0; // client plus master-reported cluster total

  std::vector<double> latency_ms() const;
  double mean_latency_ms() const;
  std::optional<double> mean_rmse() const;
  // Per-frame rows: frame_id, sent/received times, latency, bytes, rmse and
  // the master's stats for the frame. .json writes JSON, anything else CSV.
  void write(const std::filesystem::path &path) const;
};

// Connects to the master, sends one CAMERA_EVENT per frame paced by frame
// receipt and collects every FRAME_IMAGE and STATS. Connection loss yields a
// partial report rather than an exception; handshake failures throw.
//
// Two principal threads: the calling thread sends events and consumes
// frames, a networking thread receives.
RunReport run_client(const ClientOptions &options);

} // namespace cpt
