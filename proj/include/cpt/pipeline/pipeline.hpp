// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cpt/common/error.hpp"

namespace cpt {

using Clock = std::chrono::steady_clock;

struct Interval
{
  Clock::time_point start;
  Clock::time_point end;

  double ms() const { return std::chrono::duration<double, std::milli>(end - start).count(); }
  bool overlaps(const Interval &o) const { return start < o.end && o.start < end; }
};

struct PipelineStage
{
  std::string name;
  std::function<void(std::uint64_t frame_id)> work;
};

enum class Admission
{
  // Stage 0 starts a new frame as soon as it can hand off the previous one;
  // only queue backpressure limits it.
  free_running,
  // Stage 0 admits frames no faster than the slowest stage's recent busy
  // time, so frames do not pile up in queues and latency stays at the sum of
  // the stage times.
  rate_matched,
};

// Linear chain: stage i feeds stage i + 1 through its own RingQueue, so every
// queue has exactly one producer and one consumer.
struct PipelineSpec
{
  std::vector<PipelineStage> stages;
  std::size_t queue_capacity = 3;
  Admission admission = Admission::rate_matched;

  void validate() const;
};

struct FrameRecord
{
  std::uint64_t frame_id = 0;
  std::vector<Interval> stages; // index-aligned with PipelineSpec::stages

  double latency_ms() const
  {
    return std::chrono::duration<double, std::milli>(stages.back().end - stages.front().start)
        .count();
  }
};

struct PipelineStats
{
  std::vector<std::string> stage_names;
  std::vector<FrameRecord> frames;     // in completion order
  std::vector<double> stage_busy_ms;   // total busy time per stage
  std::size_t warmup_frames = 0;       // excluded from the steady-state figures
  double frame_period_ms = 0.0;        // mean spacing of last-stage completions
  double latency_ms = 0.0;             // mean first-stage start to last-stage end

  // One row per frame: frame_id, then start_ms/end_ms per stage relative to
  // the first frame's start, then latency_ms.
  std::string to_csv() const;
};

class PipelineError : public Error
{
 public:
  PipelineError(const std::string &what, std::uint64_t frame) : Error(what), frame_id(frame) {}
  std::uint64_t frame_id;
};

// Runs n_frames through the stages, one thread per stage. Stage functions run
// concurrently on different frames. A throwing stage aborts the run and the
// error is rethrown as PipelineError carrying the frame id.
PipelineStats run_pipeline(const PipelineSpec &spec, std::uint64_t n_frames);

} // namespace cpt
