// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

// cpt-master: central node. Accepts one worker per --workers slot, then one
// client (TCP) or browser viewer (WebSocket), and streams frames.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "cpt/cluster/master.hpp"
#include "cpt/protocol/codec.hpp"

namespace {

cpt::Master *g_master = nullptr;

void on_signal(int)
{
  if (g_master)
    g_master->stop();
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Cluster path tracer master"};
  std::string listen = "127.0.0.1:7400";
  std::string ws_listen;
  std::string workers;
  std::string strategy = "stride";
  std::uint32_t width = 320, height = 180, spp = 4, max_depth = cpt::kDefaultMaxDepth;
  std::uint32_t tile = cpt::kDefaultTileSize.width;
  std::string scene;
  std::string encoding = "png";
  std::string denoise = "off";
  std::string stats_out;
  std::string frames = "infinite";
  unsigned threads = 0;
  std::uint64_t seed = 1;
  double startup_timeout = 60;

  app.add_option("--listen", listen, "client TCP endpoint host:port")->capture_default_str();
  app.add_option("--ws-listen", ws_listen, "viewer WebSocket endpoint host:port");
  app.add_option("--workers", workers,
      "comma-separated endpoints, one per worker; worker i connects to the i-th");
  app.add_option("--strategy", strategy, "work distribution")
      ->check(CLI::IsMember({"tile", "sample", "stride"}))
      ->capture_default_str();
  app.add_option("--width", width)->capture_default_str();
  app.add_option("--height", height)->capture_default_str();
  app.add_option("--spp", spp, "samples per pixel per participant")->capture_default_str();
  app.add_option("--max-depth", max_depth)->capture_default_str();
  app.add_option("--tile", tile, "tile edge for --strategy tile")->capture_default_str();
  app.add_option("--scene", scene, "scene file (.json)")->required()->check(CLI::ExistingFile);
  app.add_option("--encoding", encoding)
      ->check(CLI::IsMember({"raw", "png", "jpeg", "radiance"}))
      ->capture_default_str();
  app.add_option("--denoise", denoise)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  app.add_option("--stats-out", stats_out, "per-frame stats (.csv or .json)");
  app.add_option("--frames", frames, "frame budget: n or 'infinite'")->capture_default_str();
  app.add_option("--threads", threads, "local render threads (0 = all cores)");
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--startup-timeout", startup_timeout, "seconds to wait for workers")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    cpt::MasterOptions o;
    o.listen = cpt::net::parse_endpoint(listen);
    if (!ws_listen.empty())
      o.ws_listen = cpt::net::parse_endpoint(ws_listen);
    o.workers = cpt::net::parse_endpoint_list(workers);
    o.strategy = cpt::parse_strategy(strategy);
    o.width = width;
    o.height = height;
    o.spp = spp;
    o.max_depth = max_depth;
    o.tile_size = {tile, tile};
    o.seed = seed;
    o.scene = scene;
    o.encoding = cpt::proto::parse_encoding(encoding);
    o.denoise = denoise == "on";
    if (!stats_out.empty())
      o.stats_out = stats_out;
    if (frames != "infinite")
      o.frames = std::stoull(frames);
    o.threads = threads;
    o.startup_timeout = std::chrono::milliseconds(static_cast<long long>(startup_timeout * 1000));

    cpt::Master master(o);
    g_master = &master;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "master: clients on " << o.listen.host << ':' << master.client_port();
    if (auto p = master.ws_port())
      std::cerr << ", viewer on ws://" << o.ws_listen->host << ':' << *p;
    std::cerr << ", " << o.workers.size() << " worker slot(s)\n";
    const auto n = master.run();
    g_master = nullptr;
    std::cerr << "master: streamed " << n << " frame(s)\n";
    return 0;
  } catch (const std::exception &e) {
    g_master = nullptr;
    std::cerr << "master: " << e.what() << '\n';
    return 1;
  }
}
