// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

// cpt-worker: connects to one master slot and renders its share of every frame.

#include <iostream>

#include <CLI11.hpp>

#include "cpt/cluster/worker.hpp"

#ifndef CPT_SCENE_DIR
#define CPT_SCENE_DIR "scenes"
#endif

int main(int argc, char **argv)
{
  CLI::App app{"Cluster path tracer worker"};
  std::string connect;
  std::string scene_dir = CPT_SCENE_DIR;
  unsigned threads = 0;
  std::uint32_t node_id = 0;
  double timeout = 60;
  app.add_option("--connect", connect, "master endpoint host:port")->required();
  app.add_option("--scene-dir", scene_dir, "directory of bundled scenes")->capture_default_str();
  app.add_option("--threads", threads, "render threads (0 = all cores)");
  app.add_option("--node-id", node_id, "id announced in HELLO");
  app.add_option("--connect-timeout", timeout, "seconds to keep retrying the master")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    cpt::WorkerOptions o;
    o.connect = cpt::net::parse_endpoint(connect);
    o.scene_dir = scene_dir;
    o.threads = threads;
    o.node_id = node_id;
    o.connect_timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000));
    const cpt::WorkerSummary s = cpt::run_worker(o);
    std::cerr << "worker " << node_id << ": participant " << s.config.participant_index << ", "
              << s.frames_rendered << " frame(s), " << s.end_reason << '\n';
    return s.clean ? 0 : 2;
  } catch (const std::exception &e) {
    std::cerr << "worker " << node_id << ": " << e.what() << '\n';
    return 1;
  }
}
