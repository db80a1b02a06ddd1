// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/pipeline/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "cpt/pipeline/ring_queue.hpp"

namespace cpt {

void PipelineSpec::validate() const
{
  if (stages.empty())
    throw Error("pipeline needs at least one stage");
  if (queue_capacity == 0)
    throw Error("pipeline queue capacity must be positive");
  for (const PipelineStage &s : stages)
    if (!s.work)
      throw Error("pipeline stage '" + s.name + "' has no work function");
}

std::string PipelineStats::to_csv() const
{
  std::ostringstream out;
  out << "frame_id";
  for (const std::string &name : stage_names)
    out << ',' << name << "_start_ms," << name << "_end_ms";
  out << ",latency_ms\n";
  if (frames.empty())
    return out.str();
  const auto origin = frames.front().stages.front().start;
  auto rel = [&](Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(t - origin).count();
  };
  for (const FrameRecord &f : frames) {
    out << f.frame_id;
    for (const Interval &iv : f.stages)
      out << ',' << rel(iv.start) << ',' << rel(iv.end);
    out << ',' << f.latency_ms() << '\n';
  }
  return out.str();
}

namespace {

using Token = std::optional<FrameRecord>; // nullopt is the shutdown sentinel

constexpr auto kPollInterval = std::chrono::milliseconds(20);

// Sliding median of a stage's recent busy times, published for admission.
// The median ignores the occasional overslept stage.
class BusyWindow
{
 public:
  void record(Clock::duration busy)
  {
    recent_[next_++ % recent_.size()] = busy.count();
    const std::size_t n = std::min(next_, recent_.size());
    std::array<Clock::rep, 8> sorted = recent_;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.begin() + n);
    published_.store(sorted[n / 2], std::memory_order_relaxed);
  }
  Clock::duration current() const
  {
    return Clock::duration(published_.load(std::memory_order_relaxed));
  }

 private:
  std::array<Clock::rep, 8> recent_{};
  std::size_t next_ = 0;
  std::atomic<Clock::rep> published_{0};
};

struct RunState
{
  std::atomic<bool> aborted{false};
  std::mutex failure_mutex;
  std::optional<PipelineError> failure;

  void fail(const std::string &what, std::uint64_t frame)
  {
    std::lock_guard lock(failure_mutex);
    if (!failure)
      failure.emplace(what, frame);
    aborted.store(true);
  }
};

// Pushes unless the run aborts first. Returns false on abort.
bool push_token(RingQueue<Token> &q, Token token, const RunState &state)
{
  while (q.push_blocking(token, kPollInterval) != PushResult::accepted)
    if (state.aborted.load())
      return false;
  return true;
}

} // namespace

PipelineStats run_pipeline(const PipelineSpec &spec, std::uint64_t n_frames)
{
  spec.validate();
  const std::size_t stage_count = spec.stages.size();

  std::vector<std::unique_ptr<RingQueue<Token>>> queues;
  for (std::size_t i = 0; i + 1 < stage_count; ++i)
    queues.push_back(std::make_unique<RingQueue<Token>>(spec.queue_capacity));
  std::vector<BusyWindow> busy(stage_count);
  std::vector<double> busy_total(stage_count, 0.0);
  RunState state;
  std::vector<FrameRecord> completed;
  completed.reserve(n_frames);
  std::atomic<std::uint64_t> completed_count{0};

  auto run_stage = [&](std::size_t s, FrameRecord &record) -> bool {
    Interval &iv = record.stages[s];
    iv.start = Clock::now();
    try {
      spec.stages[s].work(record.frame_id);
    } catch (const std::exception &e) {
      state.fail("stage '" + spec.stages[s].name + "' failed on frame "
              + std::to_string(record.frame_id) + ": " + e.what(),
          record.frame_id);
      return false;
    }
    iv.end = Clock::now();
    busy[s].record(iv.end - iv.start);
    busy_total[s] += iv.ms();
    return true;
  };

  auto finish = [&](std::size_t s, FrameRecord &&record) -> bool {
    if (s + 1 == stage_count) {
      completed.push_back(std::move(record));
      completed_count.fetch_add(1, std::memory_order_release);
      return true;
    }
    return push_token(*queues[s], std::move(record), state);
  };

  auto source = [&] {
    std::optional<Clock::time_point> last_admit;
    for (std::uint64_t f = 0; f < n_frames && !state.aborted.load(); ++f) {
      if (spec.admission == Admission::rate_matched && last_admit) {
        // Stage times are unknown until the first frame has passed every
        // stage, so frame 1 waits for frame 0 to complete.
        while (completed_count.load(std::memory_order_acquire) == 0 && !state.aborted.load())
          std::this_thread::sleep_for(std::chrono::microseconds(100));
        Clock::duration pace{0};
        for (const BusyWindow &w : busy)
          pace = std::max(pace, w.current());
        std::this_thread::sleep_until(*last_admit + pace);
      }
      last_admit = Clock::now();
      FrameRecord record{f, std::vector<Interval>(stage_count)};
      if (!run_stage(0, record) || !finish(0, std::move(record)))
        break;
    }
    if (stage_count > 1)
      push_token(*queues[0], std::nullopt, state);
  };

  auto relay = [&](std::size_t s) {
    for (;;) {
      Token token;
      if (queues[s - 1]->pop_blocking(token, kPollInterval) != PopStatus::item) {
        if (state.aborted.load())
          break;
        continue;
      }
      if (!token)
        break;
      if (!run_stage(s, *token) || !finish(s, std::move(*token)))
        break;
    }
    if (s + 1 < stage_count)
      push_token(*queues[s], std::nullopt, state);
  };

  {
    std::vector<std::jthread> threads;
    threads.emplace_back(source);
    for (std::size_t s = 1; s < stage_count; ++s)
      threads.emplace_back(relay, s);
  }

  if (state.failure)
    throw *state.failure;

  PipelineStats stats;
  for (const PipelineStage &s : spec.stages)
    stats.stage_names.push_back(s.name);
  stats.stage_busy_ms = busy_total;
  stats.frames = std::move(completed);

  const std::size_t n = stats.frames.size();
  stats.warmup_frames = std::min<std::size_t>(stage_count + 1, n / 4);
  const std::size_t w = stats.warmup_frames;
  if (n >= 2 && n - 1 > w) {
    const auto span = stats.frames[n - 1].stages.back().end - stats.frames[w].stages.back().end;
    stats.frame_period_ms =
        std::chrono::duration<double, std::milli>(span).count() / double(n - 1 - w);
  }
  if (n > w) {
    double sum = 0.0;
    for (std::size_t i = w; i < n; ++i)
      sum += stats.frames[i].latency_ms();
    stats.latency_ms = sum / double(n - w);
  }
  return stats;
}

} // namespace cpt
