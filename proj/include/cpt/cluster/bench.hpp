// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <sys/types.h>
#include <vector>

#include "cpt/dist/distribution.hpp"

namespace cpt {

// A spawned child process; terminated (SIGTERM, then SIGKILL) on destruction
// if still running.
class ChildProcess
{
 public:
  static ChildProcess spawn(const std::filesystem::path &exe,
      const std::vector<std::string> &args,
      const std::optional<std::filesystem::path> &log = std::nullopt);

  ChildProcess() = default;
  ChildProcess(ChildProcess &&o) noexcept : pid_(std::exchange(o.pid_, -1)) {}
  ChildProcess &operator=(ChildProcess &&o) noexcept;
  ~ChildProcess();

  pid_t pid() const { return pid_; }
  // Exit status, or nullopt if still running after `timeout`.
  std::optional<int> wait(std::chrono::milliseconds timeout);
  void terminate();

 private:
  explicit ChildProcess(pid_t pid) : pid_(pid) {}
  pid_t pid_ = -1;
};

// A currently unused loopback TCP port.
std::uint16_t free_port();

// Physical cores if the topology says so, logical CPUs otherwise.
unsigned physical_cores();

struct BenchOptions
{
  std::filesystem::path master_exe;
  std::filesystem::path worker_exe;
  std::filesystem::path scene;     // scene file for the master
  std::filesystem::path scene_dir; // where workers look the scene up
  std::vector<std::uint32_t> worker_counts{1, 2, 4};
  Strategy strategy = Strategy::stride;
  std::uint32_t width = 160;
  std::uint32_t height = 90;
  // Per-pixel samples of the final image, held fixed across worker counts.
  std::uint32_t total_spp = 32;
  std::uint64_t frames = 40;
  std::uint64_t warmup_frames = 5; // excluded from fps
  unsigned threads_per_node = 1;
  std::optional<std::filesystem::path> log_dir;
};

struct BenchRow
{
  std::uint32_t workers = 0;
  std::uint32_t participants = 0;
  std::uint32_t per_node_spp = 0;
  std::uint32_t total_spp = 0;
  double fps = 0;
  double mean_latency_ms = 0;
  double master_render_ms = 0;
  double worker_render_ms = 0;
  bool ok = false;
  std::string error;
};

// Launches master + w worker processes per worker count, drives them with an
// in-process client and measures steady-state fps.
std::vector<BenchRow> run_bench(const BenchOptions &options);
std::string bench_table(const std::vector<BenchRow> &rows);

} // namespace cpt
