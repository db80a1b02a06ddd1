// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace cpt {

enum class NodeRole : std::uint8_t
{
  client,
  master,
  worker,
};

const char *to_string(NodeRole r);

// Census of principal threads: the long-lived role threads of each node
// (render, networking, post-processing, ...). Render pool helpers and library
// I/O threads are not principal and never register.
class ThreadRegistry
{
 public:
  struct Entry
  {
    std::uint64_t id = 0;
    NodeRole role = NodeRole::client;
    std::uint32_t node = 0;
    std::string name;
  };

  // Unregisters on destruction.
  class Scope
  {
   public:
    Scope() = default;
    Scope(ThreadRegistry *registry, std::uint64_t id) : registry_(registry), id_(id) {}
    Scope(Scope &&o) noexcept : registry_(std::exchange(o.registry_, nullptr)), id_(o.id_) {}
    Scope &operator=(Scope &&o) noexcept;
    ~Scope() { release(); }
    void release();

   private:
    ThreadRegistry *registry_ = nullptr;
    std::uint64_t id_ = 0;
  };

  static ThreadRegistry &global();

  [[nodiscard]] Scope enter(NodeRole role, std::uint32_t node, std::string name);

  std::size_t active() const;
  std::size_t active(NodeRole role) const;
  std::size_t peak() const;
  void reset_peak();
  std::vector<Entry> snapshot() const;

 private:
  void leave(std::uint64_t id);

  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
  std::uint64_t next_id_ = 1;
  std::size_t peak_ = 0;
};

} // namespace cpt
