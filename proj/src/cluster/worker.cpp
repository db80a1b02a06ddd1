// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/worker.hpp"

#include <iostream>
#include <thread>
#include <variant>

#include "cpt/cluster/thread_registry.hpp"
#include "cpt/dist/distribution.hpp"
#include "cpt/pipeline/ring_queue.hpp"
#include "cpt/protocol/codec.hpp"
#include "cpt/render/scene_io.hpp"
#include "cpt/render/scene_update.hpp"

namespace cpt {

namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

struct FrameOut
{
  proto::RadianceBufferMsg buffer;
  proto::Stats stats;
};

// nullopt is the poison pill.
using Outgoing = std::optional<std::variant<FrameOut, proto::Shutdown>>;

// Handshake: read the master's HELLO and CONFIG, load the scene, answer
// HELLO. On refusal a SHUTDOWN with the reason goes back first.
Scene handshake(net::Connection &conn, const WorkerOptions &options, proto::Config &config)
{
  auto refuse = [&](const std::string &reason, const std::string &detail) {
    try {
      conn.send(proto::Shutdown{reason});
    } catch (const std::exception &) {
    }
    throw WorkerError(detail);
  };

  auto first = conn.receive(options.connect_timeout);
  if (!first)
    throw WorkerError("master sent no HELLO");
  if (auto *sd = std::get_if<proto::Shutdown>(&*first))
    throw WorkerError("master refused: " + sd->reason);
  auto *hello = std::get_if<proto::Hello>(&*first);
  if (!hello || hello->role != proto::Role::master)
    refuse("protocol", "expected HELLO from the master");
  if (hello->version != options.protocol_version)
    refuse("version",
        "master speaks protocol version " + std::to_string(hello->version) + ", this worker "
            + std::to_string(options.protocol_version));

  auto second = conn.receive(options.connect_timeout);
  if (!second || !std::holds_alternative<proto::Config>(*second))
    refuse("protocol", "expected CONFIG from the master");
  config = std::get<proto::Config>(*second);

  Scene scene;
  try {
    scene = load_scene(scene_path(options.scene_dir, config.scene_name));
  } catch (const Error &e) {
    refuse("unknown scene '" + config.scene_name + "'", e.what());
  }
  conn.send(proto::Hello{proto::Role::worker, options.node_id, options.protocol_version});
  return scene;
}

} // namespace

WorkerSummary run_worker(const WorkerOptions &options)
{
  auto scope = ThreadRegistry::global().enter(NodeRole::worker, options.node_id, "worker-main");
  WorkerSummary summary;

  net::Connection conn(net::connect(options.connect, options.connect_timeout));
  Scene scene = handshake(conn, options, summary.config);
  const proto::Config &config = summary.config;

  WorkPlan plan = cpt::plan(config.plan_config());
  if (config.participant_index == 0 || config.participant_index >= plan.assignments.size())
    throw WorkerError("CONFIG assigns participant " + std::to_string(config.participant_index)
        + " of " + std::to_string(plan.assignments.size()));
  if (plan.layout && (plan.layout->w_n != config.layout_w || plan.layout->h_n != config.layout_h))
    throw WorkerError("CONFIG stride layout disagrees with the local plan");
  const WorkAssignment &assignment = plan.assignments[config.participant_index];

  RingQueue<Outgoing> queue(options.queue_capacity);
  std::atomic<bool> net_failed{false};
  std::string net_error;

  std::jthread net([&] {
    auto net_scope =
        ThreadRegistry::global().enter(NodeRole::worker, options.node_id, "worker-net");
    try {
      for (;;) {
        Outgoing item;
        while (queue.pop_blocking(item, 100ms) != PopStatus::item) {
        }
        if (!item)
          return;
        if (auto *f = std::get_if<FrameOut>(&*item)) {
          const auto t0 = Clock::now();
          const std::size_t bytes = conn.send(f->buffer);
          conn.send(f->stats);
          if (summary.send_intervals.size() < WorkerSummary::kTimelineFrames) {
            summary.send_intervals.push_back({t0, Clock::now()});
            summary.radiance_frame_bytes.push_back(bytes);
          }
        } else {
          conn.send(std::get<proto::Shutdown>(*item));
        }
      }
    } catch (const std::exception &e) {
      net_error = e.what();
      net_failed = true;
      // Unblock the main thread's receive.
      conn.shutdown();
      // Keep draining so the main thread never blocks on a full queue.
      for (;;) {
        Outgoing item;
        if (queue.pop_blocking(item, 100ms) == PopStatus::item && !item)
          return;
      }
    }
  });

  auto enqueue = [&](Outgoing item) {
    while (queue.push_blocking(item, 100ms) != PushResult::accepted) {
    }
  };

  double pending_update_ms = 0;
  try {
    for (;;) {
      proto::Message msg = conn.receive();
      if (auto *up = std::get_if<proto::SceneUpdateMsg>(&msg)) {
        const auto t0 = Clock::now();
        apply_scene_update(scene, up->update);
        pending_update_ms += ms_since(t0);
      } else if (auto *ev = std::get_if<proto::CameraEvent>(&msg)) {
        const auto t0 = Clock::now();
        RenderCounters counters;
        FrameOut out;
        out.buffer.participant = config.participant_index;
        out.buffer.buffer =
            render_assignment(scene, ev->camera, assignment, options.threads, ev->frame_id, &counters);
        const double render_ms = ms_since(t0);
        if (summary.render_intervals.size() < WorkerSummary::kTimelineFrames)
          summary.render_intervals.push_back({t0, Clock::now()});
        out.stats.frame_id = ev->frame_id;
        out.stats.fields = {
            {"render_ms", render_ms},
            {"scene_update_ms", std::exchange(pending_update_ms, 0.0)},
            {"principal_threads", 2.0},
            {"paths", double(counters.paths.load())},
            {"nonfinite_samples", double(counters.nonfinite_samples.load())},
        };
        enqueue(Outgoing(std::move(out)));
        ++summary.frames_rendered;
      } else if (auto *sd = std::get_if<proto::Shutdown>(&msg)) {
        summary.end_reason = sd->reason.empty() ? "done" : sd->reason;
        summary.clean = summary.end_reason == "done";
        break;
      } else {
        throw WorkerError(std::string("unexpected ") + proto::to_string(proto::type_of(msg))
            + " from master");
      }
    }
  } catch (const net::ConnectionClosed &) {
    summary.end_reason = net_failed ? net_error : "connection to master lost";
  } catch (const net::NetError &e) {
    summary.end_reason = net_failed ? net_error : std::string("connection error: ") + e.what();
  } catch (const std::exception &e) {
    summary.end_reason = std::string("render error: ") + e.what();
    enqueue(Outgoing(proto::Shutdown{summary.end_reason}));
  }

  enqueue(Outgoing{});
  net.join();
  if (net_failed && summary.clean) {
    summary.clean = false;
    summary.end_reason = net_error;
  }
  summary.scene_hash = scene_state_hash(scene);
  summary.bytes_sent = conn.bytes_sent();
  if (!summary.clean)
    std::cerr << "worker " << options.node_id << ": " << summary.end_reason << '\n';
  return summary;
}

} // namespace cpt
