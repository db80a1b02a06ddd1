// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/local_cluster.hpp"

namespace cpt {

LocalCluster::LocalCluster(MasterOptions master, std::size_t workers,
    std::filesystem::path scene_dir, unsigned worker_threads)
{
  master.workers.assign(workers, net::Endpoint{"127.0.0.1", 0});
  master_ = std::make_unique<Master>(std::move(master));
  summaries_.resize(workers);
  worker_errors_.resize(workers);

  master_thread_ = std::jthread([this] {
    try {
      frames_ = master_->run();
    } catch (...) {
      master_error_ = std::current_exception();
    }
  });
  const auto endpoints = master_->worker_endpoints();
  for (std::size_t i = 0; i < workers; ++i) {
    WorkerOptions wo;
    wo.connect = endpoints[i];
    wo.scene_dir = scene_dir;
    wo.threads = worker_threads;
    wo.node_id = static_cast<std::uint32_t>(i + 1);
    worker_threads_.emplace_back([this, wo, i] {
      try {
        summaries_[i] = run_worker(wo);
      } catch (...) {
        worker_errors_[i] = std::current_exception();
      }
    });
  }
}

LocalCluster::~LocalCluster()
{
  if (!joined_) {
    master_->stop();
    try {
      join();
    } catch (...) {
    }
  }
}

net::Endpoint LocalCluster::client_endpoint() const
{
  return {"127.0.0.1", master_->client_port()};
}

std::uint64_t LocalCluster::join()
{
  if (!joined_) {
    master_thread_.join();
    worker_threads_.clear();
    joined_ = true;
  }
  if (master_error_)
    std::rethrow_exception(master_error_);
  for (const auto &e : worker_errors_)
    if (e)
      std::rethrow_exception(e);
  return frames_;
}

} // namespace cpt
