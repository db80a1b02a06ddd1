// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/bench.hpp"

#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <iomanip>
#include <set>
#include <spawn.h>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "cpt/cluster/client.hpp"
#include "cpt/net/tcp.hpp"

extern char **environ;

namespace cpt {

using namespace std::chrono_literals;

ChildProcess ChildProcess::spawn(const std::filesystem::path &exe,
    const std::vector<std::string> &args,
    const std::optional<std::filesystem::path> &log)
{
  std::vector<std::string> argv_s{exe.string()};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (auto &a : argv_s)
    argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  if (log) {
    const std::string p = log->string();
    posix_spawn_file_actions_addopen(&actions, 1, p.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, 1, 2);
  }
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, argv_s[0].c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0)
    throw Error("cannot spawn " + exe.string() + ": " + std::strerror(rc));
  return ChildProcess(pid);
}

ChildProcess &ChildProcess::operator=(ChildProcess &&o) noexcept
{
  if (this != &o) {
    terminate();
    pid_ = std::exchange(o.pid_, -1);
  }
  return *this;
}

ChildProcess::~ChildProcess() { terminate(); }

std::optional<int> ChildProcess::wait(std::chrono::milliseconds timeout)
{
  if (pid_ < 0)
    return 0;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }
    if (r < 0) {
      pid_ = -1;
      return -1;
    }
    if (std::chrono::steady_clock::now() >= deadline)
      return std::nullopt;
    std::this_thread::sleep_for(10ms);
  }
}

void ChildProcess::terminate()
{
  if (pid_ < 0)
    return;
  ::kill(pid_, SIGTERM);
  if (!wait(2000ms)) {
    ::kill(pid_, SIGKILL);
    wait(2000ms);
  }
}

std::uint16_t free_port()
{
  net::Listener l({"127.0.0.1", 0});
  return l.port();
}

unsigned physical_cores()
{
  std::ifstream in("/proc/cpuinfo");
  std::set<std::pair<int, int>> cores;
  std::string line;
  int physical = 0;
  while (std::getline(in, line)) {
    if (line.rfind("physical id", 0) == 0)
      physical = std::stoi(line.substr(line.find(':') + 1));
    else if (line.rfind("core id", 0) == 0)
      cores.insert({physical, std::stoi(line.substr(line.find(':') + 1))});
  }
  const unsigned logical = std::max(1u, std::thread::hardware_concurrency());
  if (cores.empty())
    return logical;
  return std::min<unsigned>(logical, static_cast<unsigned>(cores.size()));
}

namespace {

BenchRow bench_one(const BenchOptions &o, std::uint32_t workers)
{
  BenchRow row;
  row.workers = workers;
  row.participants = workers + 1;
  row.total_spp = o.total_spp;
  if (o.strategy == Strategy::sample) {
    if (o.total_spp % row.participants != 0) {
      row.error = "total spp " + std::to_string(o.total_spp) + " does not split over "
          + std::to_string(row.participants) + " participants";
      return row;
    }
    row.per_node_spp = o.total_spp / row.participants;
  } else {
    row.per_node_spp = o.total_spp;
  }

  const std::uint16_t client_port = free_port();
  std::string worker_list;
  std::vector<std::uint16_t> ports;
  for (std::uint32_t i = 0; i < workers; ++i) {
    ports.push_back(free_port());
    worker_list += (i ? "," : "") + std::string("127.0.0.1:") + std::to_string(ports.back());
  }
  auto log = [&](const std::string &name) -> std::optional<std::filesystem::path> {
    if (!o.log_dir)
      return std::nullopt;
    return *o.log_dir / (name + "_w" + std::to_string(workers) + ".log");
  };

  std::vector<std::string> margs{"--listen", "127.0.0.1:" + std::to_string(client_port),
      "--strategy", std::string(to_string(o.strategy)), "--width", std::to_string(o.width),
      "--height", std::to_string(o.height), "--spp", std::to_string(row.per_node_spp),
      "--scene", o.scene.string(), "--encoding", "raw", "--threads",
      std::to_string(o.threads_per_node), "--frames", std::to_string(o.frames)};
  if (workers)
    margs.insert(margs.end(), {"--workers", worker_list});
  ChildProcess master = ChildProcess::spawn(o.master_exe, margs, log("master"));
  std::vector<ChildProcess> children;
  for (std::uint32_t i = 0; i < workers; ++i)
    children.push_back(ChildProcess::spawn(o.worker_exe,
        {"--connect", "127.0.0.1:" + std::to_string(ports[i]), "--scene-dir",
            o.scene_dir.string(), "--threads", std::to_string(o.threads_per_node), "--node-id",
            std::to_string(i + 1)},
        log("worker" + std::to_string(i + 1))));

  ClientOptions co;
  co.connect = {"127.0.0.1", client_port};
  co.frames = o.frames;
  RunReport report = run_client(co);
  master.wait(10s);
  for (auto &c : children)
    c.wait(10s);

  if (report.partial) {
    row.error = report.error;
    return row;
  }
  const auto &f = report.frames;
  const std::size_t skip = std::min<std::size_t>(o.warmup_frames, f.size() > 2 ? f.size() - 2 : 0);
  const double span = f.back().received_s - f[skip].received_s;
  row.fps = span > 0 ? double(f.size() - 1 - skip) / span : 0.0;
  double lat = 0, mr = 0, wr = 0;
  for (std::size_t i = skip; i < f.size(); ++i)
    lat += f[i].latency_ms();
  std::size_t n = 0;
  for (std::size_t i = skip; i < report.stats.size(); ++i, ++n) {
    mr += report.stats[i].master_render_ms;
    wr += report.stats[i].worker_render_mean_ms;
  }
  row.mean_latency_ms = lat / double(f.size() - skip);
  row.master_render_ms = n ? mr / double(n) : 0;
  row.worker_render_ms = n ? wr / double(n) : 0;
  row.ok = true;
  return row;
}

} // namespace

std::vector<BenchRow> run_bench(const BenchOptions &options)
{
  std::vector<BenchRow> rows;
  for (std::uint32_t w : options.worker_counts) {
    try {
      rows.push_back(bench_one(options, w));
    } catch (const std::exception &e) {
      BenchRow r;
      r.workers = w;
      r.participants = w + 1;
      r.error = e.what();
      rows.push_back(r);
    }
  }
  return rows;
}

std::string bench_table(const std::vector<BenchRow> &rows)
{
  std::ostringstream out;
  out << "workers,participants,per_node_spp,total_spp,fps,speedup,mean_latency_ms,"
         "master_render_ms,worker_render_ms,status\n";
  const double base = rows.empty() || !rows.front().ok ? 0.0 : rows.front().fps;
  out << std::fixed << std::setprecision(3);
  for (const BenchRow &r : rows) {
    out << r.workers << ',' << r.participants << ',' << r.per_node_spp << ',' << r.total_spp
        << ',' << r.fps << ',' << (base > 0 ? r.fps / base : 0.0) << ',' << r.mean_latency_ms
        << ',' << r.master_render_ms << ',' << r.worker_render_ms << ','
        << (r.ok ? "ok" : r.error) << '\n';
  }
  return out.str();
}

} // namespace cpt
