// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <optional>
#include <thread>
#include <utility>

namespace cpt {

enum class PushResult
{
  accepted,
  full,
};

enum class PopStatus
{
  item,
  timeout,
};

// Fixed-capacity single-producer/single-consumer circular queue.
//
// The writer index is only written by the producer and the reader index only
// by the consumer; both grow monotonically and slot = index % capacity. A
// slot's contents are published with a release store of the writer index and
// observed after an acquire load of it (and symmetrically for reclaiming
// slots), so no locks are taken. All slot storage is allocated in the
// constructor; push and pop move elements into and out of existing slots.
//
// Exactly one producer thread and one consumer thread may use a queue
// concurrently.
template <typename T>
class RingQueue
{
 public:
  explicit RingQueue(std::size_t capacity)
      : capacity_(std::max<std::size_t>(1, capacity)),
        slots_(std::make_unique<T[]>(capacity_))
  {}

  RingQueue(const RingQueue &) = delete;
  RingQueue &operator=(const RingQueue &) = delete;

  std::size_t capacity() const { return capacity_; }

  // Approximate when called concurrently; exact from either endpoint thread
  // for its own side's bound.
  std::size_t size() const
  {
    return static_cast<std::size_t>(
        writer_.load(std::memory_order_acquire) - reader_.load(std::memory_order_acquire));
  }
  bool empty() const { return size() == 0; }

  // Producer only.
  PushResult try_push(T &&item)
  {
    const std::uint64_t w = writer_.load(std::memory_order_relaxed);
    if (w - reader_.load(std::memory_order_acquire) >= capacity_)
      return PushResult::full;
    slots_[w % capacity_] = std::move(item);
    writer_.store(w + 1, std::memory_order_release);
    return PushResult::accepted;
  }
  PushResult try_push(const T &item)
  {
    T copy(item);
    return try_push(std::move(copy));
  }

  // Producer only. Waits up to `timeout` for a free slot; on timeout the item
  // is left untouched in `item` and `full` is returned.
  template <typename Rep, typename Period>
  PushResult push_blocking(T &item, std::chrono::duration<Rep, Period> timeout)
  {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    Backoff backoff;
    for (;;) {
      const std::uint64_t w = writer_.load(std::memory_order_relaxed);
      if (w - reader_.load(std::memory_order_acquire) < capacity_) {
        slots_[w % capacity_] = std::move(item);
        writer_.store(w + 1, std::memory_order_release);
        return PushResult::accepted;
      }
      if (std::chrono::steady_clock::now() >= deadline)
        return PushResult::full;
      backoff.wait();
    }
  }

  // Consumer only.
  std::optional<T> try_pop()
  {
    const std::uint64_t r = reader_.load(std::memory_order_relaxed);
    if (r == writer_.load(std::memory_order_acquire))
      return std::nullopt;
    std::optional<T> out(std::move(slots_[r % capacity_]));
    reader_.store(r + 1, std::memory_order_release);
    return out;
  }

  // Consumer only. Moves the oldest item into `out`.
  bool try_pop(T &out)
  {
    const std::uint64_t r = reader_.load(std::memory_order_relaxed);
    if (r == writer_.load(std::memory_order_acquire))
      return false;
    out = std::move(slots_[r % capacity_]);
    reader_.store(r + 1, std::memory_order_release);
    return true;
  }

  // Consumer only. Waits up to `timeout` for an item.
  template <typename Rep, typename Period>
  PopStatus pop_blocking(T &out, std::chrono::duration<Rep, Period> timeout)
  {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    Backoff backoff;
    for (;;) {
      if (try_pop(out))
        return PopStatus::item;
      if (std::chrono::steady_clock::now() >= deadline)
        return PopStatus::timeout;
      backoff.wait();
    }
  }

  template <typename Rep, typename Period>
  std::optional<T> pop_blocking(std::chrono::duration<Rep, Period> timeout)
  {
    T out{};
    if (pop_blocking(out, timeout) == PopStatus::item)
      return out;
    return std::nullopt;
  }

 private:
  // Spin briefly, then yield, then sleep with a growing interval capped at
  // 200 us.
  struct Backoff
  {
    unsigned rounds = 0;
    void wait()
    {
      if (rounds < 64) {
        ++rounds;
        return;
      }
      if (rounds < 128) {
        ++rounds;
        std::this_thread::yield();
        return;
      }
      const auto us = std::min<unsigned>(200, 10u << std::min(rounds - 128, 4u));
      ++rounds;
      std::this_thread::sleep_for(std::chrono::microseconds(us));
    }
  };

#ifdef __cpp_lib_hardware_interference_size
  static constexpr std::size_t kLine = std::hardware_destructive_interference_size;
#else
  static constexpr std::size_t kLine = 64;
#endif

  const std::size_t capacity_;
  std::unique_ptr<T[]> slots_;
  alignas(kLine) std::atomic<std::uint64_t> writer_{0};
  alignas(kLine) std::atomic<std::uint64_t> reader_{0};
};

} // namespace cpt
