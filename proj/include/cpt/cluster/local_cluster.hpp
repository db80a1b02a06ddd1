// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <filesystem>
#include <memory>
#include <thread>
#include <vector>

#include "cpt/cluster/master.hpp"
#include "cpt/cluster/worker.hpp"

namespace cpt {

// Master plus w workers inside one process, talking over loopback TCP. The
// master runs on its own thread; each worker on another. Used by tests and
// the acceptance suite; the wire traffic is identical to separate processes.
class LocalCluster
{
 public:
  // Worker endpoints in `master` are replaced by ephemeral loopback ports.
  LocalCluster(MasterOptions master, std::size_t workers, std::filesystem::path scene_dir,
      unsigned worker_threads = 1);
  ~LocalCluster();

  net::Endpoint client_endpoint() const;
  std::optional<std::uint16_t> ws_port() const { return master_->ws_port(); }
  Master &master() { return *master_; }

  // Waits for every node to finish. Rethrows the master's failure, if any.
  std::uint64_t join();
  const std::vector<WorkerSummary> &workers() const { return summaries_; }

 private:
  std::unique_ptr<Master> master_;
  std::jthread master_thread_;
  std::vector<std::jthread> worker_threads_;
  std::vector<WorkerSummary> summaries_;
  std::vector<std::exception_ptr> worker_errors_;
  std::exception_ptr master_error_;
  std::uint64_t frames_ = 0;
  bool joined_ = false;
};

} // namespace cpt
