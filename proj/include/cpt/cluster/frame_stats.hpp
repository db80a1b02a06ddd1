// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cpt/protocol/message.hpp"

namespace cpt {

// Per-frame timing breakdown reported by the master. Times in milliseconds.
struct FrameStats
{
  std::uint64_t frame_id = 0;
  double master_render_ms = 0;
  std::vector<double> worker_render_ms; // index = worker slot
  double worker_render_mean_ms = 0;
  double scene_update_ms = 0;
  double merge_ms = 0;
  double denoise_ms = 0;
  double tone_map_ms = 0;
  double compression_ms = 0;
  // Event forwarding plus the wait between the master finishing its share
  // and the last worker buffer arriving.
  double distribution_overhead_ms = 0;
  double forward_ms = 0; // writing the frame's events to every worker
  double client_fps = 0; // frames sent per second over a sliding window
  double frame_period_ms = 0;
  std::uint32_t total_spp = 0;
  std::uint64_t upstream_bytes = 0; // radiance frames received from workers
  std::uint32_t principal_threads = 0; // master plus reporting workers
  // Milliseconds since master start: the local render of this frame and its
  // post-processing (merge through encode).
  double render_start_ms = 0;
  double render_end_ms = 0;
  double post_start_ms = 0;
  double post_end_ms = 0;

  // Render time on the frame's critical path: the slower of the master share
  // and the mean worker share.
  double render_ms() const;
  // fps ~ 0.9 / (update + render), times in seconds.
  double predicted_fps() const;

  proto::Stats to_message() const;
  static FrameStats from_message(const proto::Stats &stats);
};

double predicted_fps(double scene_update_ms, double render_ms);

std::vector<std::string> frame_stats_columns(std::size_t workers);
std::string frame_stats_csv(std::span<const FrameStats> rows);
std::string frame_stats_json(std::span<const FrameStats> rows);
// Format chosen by extension: .json writes JSON, anything else CSV.
void write_frame_stats(const std::filesystem::path &path, std::span<const FrameStats> rows);

// Sliding-window frame rate from completion timestamps (seconds).
class FpsWindow
{
 public:
  explicit FpsWindow(std::size_t window = 16) : window_(window) {}
  void add(double t_seconds);
  double fps() const;
  double mean_period_ms() const;

 private:
  std::size_t window_;
  std::vector<double> times_;
};

} // namespace cpt
