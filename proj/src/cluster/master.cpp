// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/master.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "cpt/cluster/denoise.hpp"
#include "cpt/cluster/image_codec.hpp"
#include "cpt/cluster/thread_registry.hpp"
#include "cpt/net/websocket.hpp"
#include "cpt/pipeline/ring_queue.hpp"
#include "cpt/protocol/codec.hpp"
#include "cpt/render/scene_io.hpp"
#include "cpt/render/scene_update.hpp"
#include "cpt/render/tone_map.hpp"

namespace cpt {

namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b)
{
  return std::chrono::duration<double, std::milli>(b - a).count();
}

struct LocalResult
{
  std::uint64_t frame_id = 0;
  RadianceBuffer buffer;
  double update_ms = 0;
  double forward_ms = 0;
  double render_ms = 0;
  Clock::time_point render_start;
  Clock::time_point render_end;
};

struct WorkerResult
{
  RadianceBuffer buffer;
  double render_ms = 0;
  double update_ms = 0;
  std::uint32_t principal_threads = 0;
  std::size_t frame_bytes = 0;
  Clock::time_point arrival;
};

template <typename T>
using Queue = RingQueue<std::optional<T>>;

// Retries a blocking push until it lands or `abort` is raised.
template <typename T>
bool push_until(Queue<T> &queue, std::optional<T> item, const std::atomic<bool> &abort)
{
  while (!abort.load()) {
    if (queue.push_blocking(item, 50ms) == PushResult::accepted)
      return true;
  }
  return false;
}

} // namespace

struct Master::Impl
{
  explicit Impl(MasterOptions o);

  void fail(const std::string &reason);
  bool aborted() const { return abort.load(); }

  void accept_workers();
  void accept_client();
  proto::Config config_for(std::uint32_t participant) const;

  void main_loop();
  void handle_frame(std::uint64_t frame_id, const Camera &camera);
  void forward(const proto::Message &message, double *elapsed_ms);
  void net_loop(std::size_t slot);
  void post_loop();
  void send_to_client(const proto::Message &message);

  MasterOptions options;
  Clock::time_point epoch = Clock::now();
  Scene scene;
  std::string scene_name;
  WorkPlan plan;

  std::vector<net::Listener> worker_listeners;
  std::optional<net::Listener> client_listener;
  std::unique_ptr<net::WsServer> ws;

  std::vector<std::unique_ptr<net::Connection>> workers;
  std::unique_ptr<net::Connection> client;
  bool ws_source = false;

  std::unique_ptr<Queue<LocalResult>> local_queue;
  std::vector<std::unique_ptr<Queue<WorkerResult>>> worker_queues;

  std::atomic<bool> abort{false};
  std::atomic<bool> stopping{false};
  std::atomic<bool> finishing{false};
  std::atomic<int> net_active{0};
  std::mutex error_mutex;
  std::string first_error;

  std::uint64_t frames_started = 0;
  std::optional<std::uint64_t> last_frame;
  double pending_update_ms = 0;
  std::uint64_t frames_streamed = 0;
  std::atomic<std::uint64_t> dropped{0};
  std::atomic<bool> client_gone{false};
  std::vector<FrameStats> rows;
  std::uint64_t final_hash = 0;
};

Master::Impl::Impl(MasterOptions o) : options(std::move(o))
{
  scene = load_scene(options.scene);
  scene_name = options.scene.stem().string();
  if (scene.name.empty())
    scene.name = scene_name;

  PlanConfig pc;
  pc.strategy = options.strategy;
  pc.participants = static_cast<std::uint32_t>(options.workers.size() + 1);
  pc.dims = {options.width, options.height};
  pc.per_node_spp = options.spp;
  pc.seed = options.seed;
  pc.max_depth = options.max_depth;
  pc.tile_size = options.tile_size;
  plan = cpt::plan(pc);

  for (const net::Endpoint &ep : options.workers)
    worker_listeners.emplace_back(ep);
  client_listener.emplace(options.listen);
  if (options.ws_listen)
    ws = std::make_unique<net::WsServer>(*options.ws_listen);

  local_queue = std::make_unique<Queue<LocalResult>>(options.queue_capacity);
  for (std::size_t i = 0; i < options.workers.size(); ++i)
    worker_queues.push_back(std::make_unique<Queue<WorkerResult>>(options.queue_capacity));
}

void Master::Impl::fail(const std::string &reason)
{
  {
    std::lock_guard lock(error_mutex);
    if (first_error.empty())
      first_error = reason;
  }
  abort = true;
}

proto::Config Master::Impl::config_for(std::uint32_t participant) const
{
  proto::Config c;
  c.width = options.width;
  c.height = options.height;
  c.strategy = options.strategy;
  if (plan.layout) {
    c.layout_w = plan.layout->w_n;
    c.layout_h = plan.layout->h_n;
  }
  c.per_node_spp = options.spp;
  c.participant_index = participant;
  c.participant_count = plan.config.participants;
  c.max_depth = options.max_depth;
  c.tile_w = options.tile_size.width;
  c.tile_h = options.tile_size.height;
  c.seed = options.seed;
  c.scene_name = scene_name;
  return c;
}

void Master::Impl::accept_workers()
{
  const auto deadline = Clock::now() + options.startup_timeout;
  for (std::size_t slot = 0; slot < worker_listeners.size(); ++slot) {
    std::optional<net::Socket> sock;
    while (!sock) {
      if (stopping || Clock::now() >= deadline)
        throw MasterError("no worker connected to slot " + std::to_string(slot) + " ("
            + worker_listeners[slot].endpoint().to_string() + ")");
      sock = worker_listeners[slot].accept(100ms);
    }
    auto conn = std::make_unique<net::Connection>(std::move(*sock));
    const auto participant = static_cast<std::uint32_t>(slot + 1);
    conn->send(proto::Hello{proto::Role::master, 0, proto::kProtocolVersion});
    conn->send(config_for(participant));
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    auto reply = conn->receive(std::max(left, 1ms));
    if (!reply)
      throw MasterError("worker " + std::to_string(participant) + " did not finish the handshake");
    if (auto *s = std::get_if<proto::Shutdown>(&*reply))
      throw MasterError("worker " + std::to_string(participant) + " refused: " + s->reason);
    auto *hello = std::get_if<proto::Hello>(&*reply);
    if (!hello || hello->role != proto::Role::worker)
      throw MasterError("worker " + std::to_string(participant) + " sent "
          + proto::to_string(proto::type_of(*reply)) + " instead of HELLO");
    if (hello->version != proto::kProtocolVersion) {
      conn->send(proto::Shutdown{"version"});
      throw MasterError("worker " + std::to_string(participant) + " speaks protocol version "
          + std::to_string(hello->version));
    }
    workers.push_back(std::move(conn));
  }
  for (auto &l : worker_listeners)
    l.close();
}

void Master::Impl::accept_client()
{
  for (;;) {
    if (stopping)
      return;
    if (ws && ws->connected()) {
      ws_source = true;
      return;
    }
    auto sock = client_listener->accept(100ms);
    if (!sock)
      continue;
    auto conn = std::make_unique<net::Connection>(std::move(*sock));
    auto hello = conn->receive(options.startup_timeout);
    if (!hello || !std::holds_alternative<proto::Hello>(*hello)) {
      std::cerr << "master: client did not open with HELLO; dropped\n";
      continue;
    }
    if (std::get<proto::Hello>(*hello).version != proto::kProtocolVersion) {
      conn->send(proto::Shutdown{"version"});
      continue;
    }
    conn->send(proto::Hello{proto::Role::master, 0, proto::kProtocolVersion});
    conn->send(config_for(0));
    // Initial pose for clients without a scripted path.
    conn->send(proto::CameraEvent{0, scene.camera});
    client = std::move(conn);
    return;
  }
}

void Master::Impl::forward(const proto::Message &message, double *elapsed_ms)
{
  if (workers.empty())
    return;
  const auto t0 = Clock::now();
  const auto bytes = proto::encode(message);
  for (std::size_t i = 0; i < workers.size(); ++i) {
    try {
      workers[i]->send_bytes(bytes);
    } catch (const net::NetError &e) {
      throw MasterError("forwarding to worker " + std::to_string(i + 1) + " failed: " + e.what());
    }
  }
  if (elapsed_ms)
    *elapsed_ms += ms_between(t0, Clock::now());
}

void Master::Impl::handle_frame(std::uint64_t frame_id, const Camera &camera)
{
  LocalResult r;
  r.frame_id = frame_id;
  r.update_ms = std::exchange(pending_update_ms, 0.0);

  if (scene.animation) {
    const auto t0 = Clock::now();
    SceneUpdate update = make_animation_update(scene, frame_id);
    forward(proto::SceneUpdateMsg{update}, &r.forward_ms);
    apply_scene_update(scene, update);
    r.update_ms += ms_between(t0, Clock::now());
  }

  forward(proto::CameraEvent{frame_id, camera}, &r.forward_ms);

  const auto t0 = Clock::now();
  r.render_start = t0;
  r.buffer = render_assignment(scene, camera, plan.assignments[0], options.threads, frame_id);
  r.render_end = Clock::now();
  r.render_ms = ms_between(t0, r.render_end);
  ++frames_started;
  push_until(*local_queue, std::optional<LocalResult>(std::move(r)), abort);
}

void Master::Impl::main_loop()
{
  auto budget_left = [&] { return !options.frames || frames_started < *options.frames; };
  while (!aborted() && !stopping && budget_left()) {
    if (ws_source) {
      auto ev = ws->next_event(100ms);
      if (!ev)
        continue;
      // Viewer ids restart on reconnect; keep ours increasing.
      const std::uint64_t id = last_frame ? std::max(*last_frame + 1, ev->frame_id) : ev->frame_id;
      last_frame = id;
      handle_frame(id, ev->camera);
      continue;
    }
    if (!client)
      break;
    std::optional<proto::Message> msg;
    try {
      msg = client->receive(100ms);
    } catch (const net::ConnectionClosed &) {
      client_gone = true;
      break;
    } catch (const net::NetError &e) {
      std::cerr << "master: client connection lost: " << e.what() << '\n';
      client_gone = true;
      break;
    }
    if (!msg)
      continue;
    if (auto *ev = std::get_if<proto::CameraEvent>(&*msg)) {
      validate(ev->camera);
      last_frame = ev->frame_id;
      handle_frame(ev->frame_id, ev->camera);
    } else if (auto *up = std::get_if<proto::SceneUpdateMsg>(&*msg)) {
      const auto t0 = Clock::now();
      forward(*up, nullptr);
      apply_scene_update(scene, up->update);
      pending_update_ms += ms_between(t0, Clock::now());
    } else if (std::holds_alternative<proto::Shutdown>(*msg)) {
      break;
    } else {
      throw MasterError(std::string("unexpected ") + proto::to_string(proto::type_of(*msg))
          + " from client");
    }
  }
}

void Master::Impl::net_loop(std::size_t slot)
{
  const auto participant = static_cast<std::uint32_t>(slot + 1);
  auto scope = ThreadRegistry::global().enter(
      NodeRole::master, 0, "master-net-" + std::to_string(participant));
  struct Leave
  {
    std::atomic<int> &n;
    ~Leave() { --n; }
  } leave{net_active};
  net::Connection &conn = *workers[slot];
  const Extent expect = plan.result_dims(participant);
  std::optional<WorkerResult> pending;
  try {
    while (!aborted()) {
      auto msg = conn.receive(100ms);
      if (!msg)
        continue;
      if (auto *rb = std::get_if<proto::RadianceBufferMsg>(&*msg)) {
        if (rb->participant != participant || rb->buffer.extent() != expect)
          throw MasterError("worker " + std::to_string(participant)
              + " returned a buffer for the wrong share");
        pending.emplace();
        pending->buffer = std::move(rb->buffer);
        pending->frame_bytes = conn.last_frame_size();
        pending->arrival = Clock::now();
      } else if (auto *st = std::get_if<proto::Stats>(&*msg)) {
        if (!pending || st->frame_id != pending->buffer.frame_id)
          throw MasterError("worker " + std::to_string(participant) + " sent STATS out of turn");
        pending->render_ms = st->get("render_ms").value_or(0.0);
        pending->update_ms = st->get("scene_update_ms").value_or(0.0);
        pending->principal_threads =
            static_cast<std::uint32_t>(st->get("principal_threads").value_or(0.0));
        auto done = std::exchange(pending, std::nullopt);
        if (!push_until(*worker_queues[slot], std::move(done), abort))
          return;
      } else if (auto *sd = std::get_if<proto::Shutdown>(&*msg)) {
        if (finishing && (sd->reason.empty() || sd->reason == "done"))
          return;
        throw MasterError("worker " + std::to_string(participant) + " shut down: " + sd->reason);
      } else {
        throw MasterError(std::string("unexpected ") + proto::to_string(proto::type_of(*msg))
            + " from worker " + std::to_string(participant));
      }
    }
  } catch (const net::ConnectionClosed &) {
    if (!finishing && !aborted())
      fail("worker " + std::to_string(participant) + " disconnected");
  } catch (const std::exception &e) {
    if (!aborted())
      fail(e.what());
  }
}

void Master::Impl::send_to_client(const proto::Message &message)
{
  if (!client || client_gone)
    return;
  try {
    client->send(message);
  } catch (const net::NetError &e) {
    std::cerr << "master: client send failed: " << e.what() << '\n';
    client_gone = true;
  }
}

void Master::Impl::post_loop()
{
  auto scope = ThreadRegistry::global().enter(NodeRole::master, 0, "master-post");
  FpsWindow window(16);
  const auto run_start = Clock::now();
  const std::size_t n_workers = workers.size();
  std::vector<RadianceBuffer> buffers(n_workers + 1);
  std::uint32_t worker_threads = 0;

  try {
    for (;;) {
      std::optional<LocalResult> local;
      while (!aborted()) {
        if (local_queue->pop_blocking(local, 50ms) == PopStatus::item)
          break;
      }
      if (aborted() || !local)
        break;
      const std::uint64_t frame_id = local->frame_id;

      FrameStats fs;
      fs.frame_id = frame_id;
      fs.master_render_ms = local->render_ms;
      fs.scene_update_ms = local->update_ms;
      fs.forward_ms = local->forward_ms;
      fs.render_start_ms = ms_between(epoch, local->render_start);
      fs.render_end_ms = ms_between(epoch, local->render_end);
      fs.total_spp = plan.total_spp();
      buffers[0] = std::move(local->buffer);

      const double period = window.mean_period_ms();
      const auto timeout = std::max<std::chrono::milliseconds>(options.min_frame_timeout,
          std::chrono::milliseconds(static_cast<long long>(10 * period)));
      Clock::time_point last_arrival = local->render_end;
      worker_threads = 0;
      for (std::size_t i = 0; i < n_workers; ++i) {
        std::optional<WorkerResult> wr;
        const auto deadline = Clock::now() + timeout;
        while (!aborted() && Clock::now() < deadline) {
          if (worker_queues[i]->pop_blocking(wr, 50ms) == PopStatus::item)
            break;
        }
        if (aborted())
          throw MasterError("aborted");
        if (!wr) {
          ++dropped;
          throw MasterError("frame " + std::to_string(frame_id) + " aborted: worker "
              + std::to_string(i + 1) + " missed the " + std::to_string(timeout.count())
              + " ms deadline");
        }
        if (wr->buffer.frame_id != frame_id)
          throw MasterError("worker " + std::to_string(i + 1) + " returned frame "
              + std::to_string(wr->buffer.frame_id) + " while merging "
              + std::to_string(frame_id));
        fs.worker_render_ms.push_back(wr->render_ms);
        fs.scene_update_ms = std::max(fs.scene_update_ms, wr->update_ms);
        fs.upstream_bytes += wr->frame_bytes;
        worker_threads += wr->principal_threads;
        last_arrival = std::max(last_arrival, wr->arrival);
        buffers[i + 1] = std::move(wr->buffer);
      }
      if (n_workers)
        fs.worker_render_mean_ms =
            std::accumulate(fs.worker_render_ms.begin(), fs.worker_render_ms.end(), 0.0)
            / double(n_workers);
      fs.distribution_overhead_ms = fs.forward_ms + ms_between(local->render_end, last_arrival);

      auto t = Clock::now();
      fs.post_start_ms = ms_between(epoch, t);
      RadianceBuffer merged = merge_participants(plan, buffers);
      fs.merge_ms = ms_between(t, Clock::now());
      if (options.denoise) {
        t = Clock::now();
        merged = denoise(merged, {3, 0.25f, options.threads});
        fs.denoise_ms = ms_between(t, Clock::now());
      }

      proto::FrameImage image;
      image.frame_id = frame_id;
      image.encoding = options.encoding;
      image.width = merged.width;
      image.height = merged.height;
      bool encoded = true;
      std::optional<Image8> ldr;
      try {
        if (options.encoding == proto::ImageEncoding::radiance_f32) {
          t = Clock::now();
          image.bytes = encode_radiance_dump(merged);
          fs.compression_ms = ms_between(t, Clock::now());
        } else {
          t = Clock::now();
          ldr = tone_map(merged);
          fs.tone_map_ms = ms_between(t, Clock::now());
          t = Clock::now();
          switch (options.encoding) {
          case proto::ImageEncoding::raw_rgb8:
            image.bytes = ldr->rgb;
            break;
          case proto::ImageEncoding::png:
            image.bytes = encode_png(*ldr);
            break;
          case proto::ImageEncoding::jpeg:
            image.bytes = encode_jpeg(*ldr, options.jpeg_quality);
            break;
          default:
            break;
          }
          fs.compression_ms = ms_between(t, Clock::now());
        }
      } catch (const CodecError &e) {
        std::cerr << "master: frame " << frame_id << " dropped: " << e.what() << '\n';
        ++dropped;
        encoded = false;
      }

      if (encoded)
        send_to_client(image);
      if (ws && ws->connected()) {
        if (image.encoding == proto::ImageEncoding::jpeg && encoded) {
          ws->send_frame(image);
        } else {
          if (!ldr)
            ldr = tone_map(merged);
          proto::FrameImage jpeg = image;
          jpeg.encoding = proto::ImageEncoding::jpeg;
          jpeg.bytes = encode_jpeg(*ldr, options.jpeg_quality);
          ws->send_frame(jpeg);
        }
      }

      window.add(std::chrono::duration<double>(Clock::now() - run_start).count());
      fs.client_fps = window.fps();
      fs.frame_period_ms = window.mean_period_ms();
      fs.principal_threads = static_cast<std::uint32_t>(2 + n_workers) + worker_threads;
      fs.post_end_ms = ms_between(epoch, Clock::now());
      const proto::Stats stats = fs.to_message();
      send_to_client(stats);
      if (ws && ws->connected())
        ws->send_text(net::stats_json(stats));
      rows.push_back(std::move(fs));
      ++frames_streamed;
    }
  } catch (const std::exception &e) {
    fail(e.what());
  }

  std::string reason = "done";
  {
    std::lock_guard lock(error_mutex);
    if (!first_error.empty())
      reason = first_error;
  }
  send_to_client(proto::Shutdown{reason});
}

Master::Master(MasterOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Master::~Master() = default;

std::uint16_t Master::client_port() const { return impl_->client_listener->port(); }

std::optional<std::uint16_t> Master::ws_port() const
{
  if (!impl_->ws)
    return std::nullopt;
  return impl_->ws->port();
}

std::vector<net::Endpoint> Master::worker_endpoints() const
{
  std::vector<net::Endpoint> out;
  for (const auto &l : impl_->worker_listeners)
    out.push_back(l.endpoint());
  return out;
}

const WorkPlan &Master::work_plan() const { return impl_->plan; }

void Master::stop() { impl_->stopping = true; }

const std::vector<FrameStats> &Master::stats() const { return impl_->rows; }
std::uint64_t Master::scene_hash() const { return impl_->final_hash; }
std::uint64_t Master::dropped_frames() const { return impl_->dropped; }

std::uint64_t Master::run()
{
  Impl &m = *impl_;
  auto scope = ThreadRegistry::global().enter(NodeRole::master, 0, "master-main");

  m.accept_workers();
  m.accept_client();

  std::vector<std::jthread> net_threads;
  m.net_active = static_cast<int>(m.workers.size());
  for (std::size_t i = 0; i < m.workers.size(); ++i)
    net_threads.emplace_back([&m, i] { m.net_loop(i); });
  std::jthread post([&m] { m.post_loop(); });

  try {
    m.main_loop();
  } catch (const std::exception &e) {
    m.fail(e.what());
  }

  m.finishing = true;
  if (!m.aborted())
    push_until(*m.local_queue, std::optional<LocalResult>{}, m.abort);
  std::string reason = "done";
  {
    std::lock_guard lock(m.error_mutex);
    if (!m.first_error.empty())
      reason = m.first_error;
  }
  if (!m.aborted()) {
    // Workers finish every forwarded frame before honouring SHUTDOWN.
    try {
      m.forward(proto::Shutdown{"done"}, nullptr);
    } catch (const std::exception &e) {
      m.fail(e.what());
    }
  }
  post.join();
  if (m.aborted()) {
    std::lock_guard lock(m.error_mutex);
    reason = m.first_error;
  }
  if (m.aborted()) {
    for (auto &w : m.workers) {
      try {
        w->send(proto::Shutdown{reason});
      } catch (const std::exception &) {
      }
    }
  }

  // Workers close their end once their last buffer is out; give them a
  // moment, then cut any straggler loose.
  const auto grace = Clock::now() + 5s;
  while (m.net_active.load() > 0 && Clock::now() < grace && !m.aborted())
    std::this_thread::sleep_for(5ms);
  m.abort = true;
  for (auto &w : m.workers)
    w->shutdown();
  net_threads.clear();

  if (m.ws)
    m.ws->stop();
  m.final_hash = scene_state_hash(m.scene);
  if (m.options.stats_out && !m.rows.empty())
    write_frame_stats(*m.options.stats_out, m.rows);

  if (!m.first_error.empty() && m.first_error != "done")
    throw MasterError(m.first_error);
  return m.frames_streamed;
}

} // namespace cpt
