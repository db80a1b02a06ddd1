// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

// cpt-client: headless scripted client, plus `bench` which launches master
// and worker processes and prints a scaling table.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cpt/cluster/bench.hpp"
#include "cpt/cluster/client.hpp"
#include "cpt/cluster/image_codec.hpp"

#ifndef CPT_SCENE_DIR
#define CPT_SCENE_DIR "scenes"
#endif

namespace {

std::vector<std::uint32_t> parse_counts(const std::string &s)
{
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(static_cast<std::uint32_t>(std::stoul(item)));
  return out;
}

int run(const std::string &connect, std::uint64_t frames, const std::string &camera_path,
    double orbit, const std::string &report_out, const std::string &dump_dir,
    const std::string &reference)
{
  cpt::ClientOptions o;
  o.connect = cpt::net::parse_endpoint(connect);
  o.frames = frames;
  if (!camera_path.empty())
    o.path = cpt::load_camera_path(camera_path);
  if (!dump_dir.empty())
    o.dump_dir = dump_dir;
  if (!reference.empty())
    o.reference = cpt::read_pfm(reference);
  if (orbit != 0)
    o.orbit_degrees = static_cast<float>(orbit);
  const cpt::RunReport r = cpt::run_client(o);
  std::cout << "frames " << r.frames.size() << ", fps " << r.fps << ", mean latency "
            << r.mean_latency_ms() << " ms";
  if (auto e = r.mean_rmse())
    std::cout << ", mean rmse " << *e;
  std::cout << '\n';
  if (!report_out.empty())
    r.write(report_out);
  if (r.partial) {
    std::cerr << "client: partial run: " << r.error << '\n';
    return 2;
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Cluster path tracer client"};
  app.require_subcommand(0, 1);

  std::string connect = "127.0.0.1:7400";
  std::uint64_t frames = 100;
  std::string camera_path, report_out, dump_dir, reference;
  double orbit = 0;
  app.add_option("--connect", connect, "master endpoint host:port")->capture_default_str();
  app.add_option("--frames", frames)->capture_default_str();
  app.add_option("--camera-path", camera_path, "camera path JSON")->check(CLI::ExistingFile);
  app.add_option("--orbit", orbit,
      "without --camera-path: orbit this many degrees around the announced pose");
  app.add_option("--report-out", report_out, "run report (.csv or .json)");
  app.add_option("--dump-frames", dump_dir, "directory for received frames");
  app.add_option("--reference", reference, "reference radiance (.pfm) for RMSE")
      ->check(CLI::ExistingFile);

  auto *bench = app.add_subcommand("bench", "launch master + workers locally and measure scaling");
  const auto exe_dir = std::filesystem::canonical("/proc/self/exe").parent_path();
  cpt::BenchOptions b;
  b.master_exe = exe_dir / "cpt-master";
  b.worker_exe = exe_dir / "cpt-worker";
  std::string scene = std::string(CPT_SCENE_DIR) + "/gloss.json";
  std::string scene_dir = CPT_SCENE_DIR;
  std::string counts = "1,2,4";
  std::string strategy = "stride";
  std::string out, log_dir;
  bench->add_option("--scene", scene)->check(CLI::ExistingFile)->capture_default_str();
  bench->add_option("--scene-dir", scene_dir)->capture_default_str();
  bench->add_option("--workers", counts, "worker counts")->capture_default_str();
  bench->add_option("--strategy", strategy)
      ->check(CLI::IsMember({"tile", "sample", "stride"}))
      ->capture_default_str();
  bench->add_option("--width", b.width)->capture_default_str();
  bench->add_option("--height", b.height)->capture_default_str();
  bench->add_option("--total-spp", b.total_spp, "final-image spp held fixed")
      ->capture_default_str();
  bench->add_option("--frames", b.frames)->capture_default_str();
  bench->add_option("--warmup", b.warmup_frames)->capture_default_str();
  bench->add_option("--threads", b.threads_per_node, "render threads per node")
      ->capture_default_str();
  bench->add_option("--out", out, "write the table as CSV");
  bench->add_option("--log-dir", log_dir, "capture node stderr here");
  bench->add_option("--master-exe", b.master_exe)->capture_default_str();
  bench->add_option("--worker-exe", b.worker_exe)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      b.scene = scene;
      b.scene_dir = scene_dir;
      b.worker_counts = parse_counts(counts);
      b.strategy = cpt::parse_strategy(strategy);
      if (!log_dir.empty()) {
        std::filesystem::create_directories(log_dir);
        b.log_dir = log_dir;
      }
      const auto rows = cpt::run_bench(b);
      const std::string table = cpt::bench_table(rows);
      std::cout << "host physical cores: " << cpt::physical_cores() << '\n' << table;
      if (!out.empty())
        std::ofstream(out) << table;
      for (const auto &r : rows)
        if (!r.ok)
          return 2;
      return 0;
    }
    return run(connect, frames, camera_path, orbit, report_out, dump_dir, reference);
  } catch (const std::exception &e) {
    std::cerr << "client: " << e.what() << '\n';
    return 1;
  }
}
