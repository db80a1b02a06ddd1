// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/thread_registry.hpp"

#include <algorithm>

namespace cpt {

const char *to_string(NodeRole r)
{
  switch (r) {
  case NodeRole::client:
    return "client";
  case NodeRole::master:
    return "master";
  case NodeRole::worker:
    return "worker";
  }
  return "unknown";
}

ThreadRegistry::Scope &ThreadRegistry::Scope::operator=(Scope &&o) noexcept
{
  if (this != &o) {
    release();
    registry_ = std::exchange(o.registry_, nullptr);
    id_ = o.id_;
  }
  return *this;
}

void ThreadRegistry::Scope::release()
{
  if (registry_)
    std::exchange(registry_, nullptr)->leave(id_);
}

ThreadRegistry &ThreadRegistry::global()
{
  static ThreadRegistry registry;
  return registry;
}

ThreadRegistry::Scope ThreadRegistry::enter(NodeRole role, std::uint32_t node, std::string name)
{
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  entries_.push_back({id, role, node, std::move(name)});
  peak_ = std::max(peak_, entries_.size());
  return Scope(this, id);
}

void ThreadRegistry::leave(std::uint64_t id)
{
  std::lock_guard lock(mutex_);
  std::erase_if(entries_, [id](const Entry &e) { return e.id == id; });
}

std::size_t ThreadRegistry::active() const
{
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t ThreadRegistry::active(NodeRole role) const
{
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [role](const Entry &e) {
        return e.role == role;
      }));
}

std::size_t ThreadRegistry::peak() const
{
  std::lock_guard lock(mutex_);
  return peak_;
}

void ThreadRegistry::reset_peak()
{
  std::lock_guard lock(mutex_);
  peak_ = entries_.size();
}

std::vector<ThreadRegistry::Entry> ThreadRegistry::snapshot() const
{
  std::lock_guard lock(mutex_);
  return entries_;
}

} // namespace cpt
