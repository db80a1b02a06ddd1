// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/client.hpp"

#include <fstream>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "cpt/cluster/image_codec.hpp"
#include "cpt/cluster/thread_registry.hpp"
#include "cpt/pipeline/ring_queue.hpp"
#include "cpt/protocol/codec.hpp"

namespace cpt {

namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

struct Incoming
{
  std::optional<proto::Message> message; // empty on connection end
  std::string error;
  double at_s = 0;
};

std::string frame_file_name(std::uint64_t id, proto::ImageEncoding e)
{
  char name[64];
  const char *ext = e == proto::ImageEncoding::png ? "png"
      : e == proto::ImageEncoding::jpeg            ? "jpg"
      : e == proto::ImageEncoding::radiance_f32    ? "pfm"
                                                   : "ppm";
  std::snprintf(name, sizeof(name), "frame_%06llu.%s", static_cast<unsigned long long>(id), ext);
  return name;
}

void dump_frame(const std::filesystem::path &dir, const proto::FrameImage &f,
    const std::optional<RadianceBuffer> &radiance)
{
  const auto path = dir / frame_file_name(f.frame_id, f.encoding);
  if (f.encoding == proto::ImageEncoding::radiance_f32) {
    write_pfm(path, *radiance);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (f.encoding == proto::ImageEncoding::raw_rgb8)
    out << "P6\n" << f.width << ' ' << f.height << "\n255\n";
  out.write(reinterpret_cast<const char *>(f.bytes.data()), std::streamsize(f.bytes.size()));
}

} // namespace

std::vector<double> RunReport::latency_ms() const
{
  std::vector<double> out;
  for (const auto &f : frames)
    out.push_back(f.latency_ms());
  return out;
}

double RunReport::mean_latency_ms() const
{
  const auto l = latency_ms();
  return l.empty() ? 0.0 : std::accumulate(l.begin(), l.end(), 0.0) / double(l.size());
}

std::optional<double> RunReport::mean_rmse() const
{
  double sum = 0;
  std::size_t n = 0;
  for (const auto &f : frames)
    if (f.rmse) {
      sum += *f.rmse;
      ++n;
    }
  if (n == 0)
    return std::nullopt;
  return sum / double(n);
}

void RunReport::write(const std::filesystem::path &path) const
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write report to " + path.string());
  auto stats_for = [&](std::uint64_t id) -> const FrameStats * {
    for (const auto &s : stats)
      if (s.frame_id == id)
        return &s;
    return nullptr;
  };
  if (path.extension() == ".json") {
    nlohmann::json j;
    j["fps"] = fps;
    j["partial"] = partial;
    j["error"] = error;
    j["mean_latency_ms"] = mean_latency_ms();
    j["principal_threads"] = principal_threads;
    if (auto r = mean_rmse())
      j["mean_rmse"] = *r;
    j["frames"] = nlohmann::json::array();
    for (const auto &f : frames) {
      nlohmann::json row{{"frame_id", f.frame_id},
          {"sent_s", f.sent_s},
          {"received_s", f.received_s},
          {"latency_ms", f.latency_ms()},
          {"bytes", f.byte_count}};
      if (f.rmse)
        row["rmse"] = *f.rmse;
      if (const auto *s = stats_for(f.frame_id)) {
        const auto m = s->to_message();
        for (const auto &[name, value] : m.fields)
          row["stats"][name] = value;
      }
      j["frames"].push_back(std::move(row));
    }
    out << j.dump(2) << '\n';
    return;
  }
  const std::size_t workers = stats.empty() ? 0 : stats.front().worker_render_ms.size();
  out << "frame_id,sent_s,received_s,latency_ms,bytes,rmse";
  const auto cols = frame_stats_columns(workers);
  for (std::size_t i = 1; i < cols.size(); ++i)
    out << ',' << cols[i];
  out << '\n';
  for (const auto &f : frames) {
    out << f.frame_id << ',' << f.sent_s << ',' << f.received_s << ',' << f.latency_ms() << ','
        << f.byte_count << ',';
    if (f.rmse)
      out << *f.rmse;
    if (const auto *s = stats_for(f.frame_id)) {
      for (const auto &[name, value] : s->to_message().fields)
        out << ',' << value;
    }
    out << '\n';
  }
}

RunReport run_client(const ClientOptions &options)
{
  auto scope = ThreadRegistry::global().enter(NodeRole::client, options.node_id, "client-ui");
  RunReport report;
  const auto start = Clock::now();
  auto now_s = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  net::Connection conn(net::connect(options.connect, options.connect_timeout));
  conn.send(proto::Hello{proto::Role::client, options.node_id, proto::kProtocolVersion});
  Camera initial;
  for (int i = 0; i < 3; ++i) {
    auto msg = conn.receive(options.connect_timeout);
    if (!msg)
      throw net::NetError("master did not answer the handshake");
    if (auto *sd = std::get_if<proto::Shutdown>(&*msg))
      throw net::NetError("master refused: " + sd->reason);
    if (i == 0 && !std::holds_alternative<proto::Hello>(*msg))
      throw net::NetError("expected HELLO from the master");
    if (i == 1) {
      if (!std::holds_alternative<proto::Config>(*msg))
        throw net::NetError("expected CONFIG from the master");
      report.config = std::get<proto::Config>(*msg);
    }
    if (i == 2) {
      if (!std::holds_alternative<proto::CameraEvent>(*msg))
        throw net::NetError("expected the initial camera from the master");
      initial = std::get<proto::CameraEvent>(*msg).camera;
    }
  }
  const CameraPath path = options.path ? *options.path
      : options.orbit_degrees ? CameraPath::orbit(initial, options.frames, *options.orbit_degrees)
                              : CameraPath::hold(initial);
  if (options.dump_dir)
    std::filesystem::create_directories(*options.dump_dir);

  RingQueue<Incoming> inbox(64);
  std::atomic<bool> stop_net{false};
  std::jthread net([&] {
    auto net_scope =
        ThreadRegistry::global().enter(NodeRole::client, options.node_id, "client-net");
    auto deliver = [&](Incoming in) {
      while (!stop_net && inbox.push_blocking(in, 50ms) != PushResult::accepted) {
      }
    };
    try {
      while (!stop_net) {
        auto msg = conn.receive(50ms);
        if (!msg)
          continue;
        const bool last = std::holds_alternative<proto::Shutdown>(*msg);
        deliver(Incoming{std::move(msg), {}, now_s()});
        if (last)
          return;
      }
    } catch (const net::ConnectionClosed &) {
      deliver(Incoming{std::nullopt, "connection closed by master", now_s()});
    } catch (const std::exception &e) {
      deliver(Incoming{std::nullopt, e.what(), now_s()});
    }
  });

  std::vector<double> sent_at;
  std::uint64_t next_event = 0;
  auto send_event = [&] {
    sent_at.push_back(now_s());
    conn.send(proto::CameraEvent{next_event, path.at(next_event)});
    ++next_event;
  };

  std::uint64_t stats_seen = 0;
  bool ended = false;
  try {
    while (next_event < options.frames && next_event < options.window)
      send_event();
    auto last_progress = Clock::now();
    while (!ended && stats_seen < options.frames) {
      Incoming in;
      if (inbox.pop_blocking(in, 50ms) != PopStatus::item) {
        if (Clock::now() - last_progress > options.frame_timeout) {
          report.error = "timed out waiting for frame " + std::to_string(stats_seen);
          report.partial = true;
          break;
        }
        continue;
      }
      last_progress = Clock::now();
      if (!in.message) {
        report.error = in.error;
        report.partial = true;
        ended = true;
        break;
      }
      if (auto *f = std::get_if<proto::FrameImage>(&*in.message)) {
        ReceivedFrame rf;
        rf.frame_id = f->frame_id;
        rf.sent_s = f->frame_id < sent_at.size() ? sent_at[f->frame_id] : in.at_s;
        rf.received_s = in.at_s;
        rf.encoding = f->encoding;
        rf.width = f->width;
        rf.height = f->height;
        rf.byte_count = f->bytes.size();
        std::optional<RadianceBuffer> radiance;
        if (f->encoding == proto::ImageEncoding::radiance_f32) {
          radiance = decode_radiance_dump(f->bytes, f->width, f->height);
          radiance->frame_id = f->frame_id;
          if (options.reference)
            rf.rmse = rmse(*radiance, *options.reference);
        }
        if (options.dump_dir)
          dump_frame(*options.dump_dir, *f, radiance);
        if (options.keep_radiance)
          rf.radiance = std::move(radiance);
        if (options.keep_frames)
          rf.bytes = std::move(f->bytes);
        report.frames.push_back(std::move(rf));
      } else if (auto *s = std::get_if<proto::Stats>(&*in.message)) {
        report.stats.push_back(FrameStats::from_message(*s));
        ++stats_seen;
        if (next_event < options.frames)
          send_event();
      } else if (auto *sd = std::get_if<proto::Shutdown>(&*in.message)) {
        report.shutdown_reason = sd->reason;
        if (stats_seen < options.frames) {
          report.partial = true;
          report.error = "master shut down: " + sd->reason;
        }
        ended = true;
      }
    }
    if (!ended) {
      conn.send(proto::Shutdown{"done"});
      // Wait for the master's SHUTDOWN so its last stats are not cut off.
      const auto deadline = Clock::now() + 10s;
      while (Clock::now() < deadline) {
        Incoming in;
        if (inbox.pop_blocking(in, 50ms) != PopStatus::item)
          continue;
        if (!in.message)
          break;
        if (auto *sd = std::get_if<proto::Shutdown>(&*in.message)) {
          report.shutdown_reason = sd->reason;
          break;
        }
      }
    }
  } catch (const std::exception &e) {
    report.error = e.what();
    report.partial = true;
  }
  stop_net = true;
  conn.shutdown();
  net.join();

  if (report.frames.size() >= 2) {
    const double span = report.frames.back().received_s - report.frames.front().received_s;
    if (span > 0)
      report.fps = double(report.frames.size() - 1) / span;
  }
  if (!report.stats.empty())
    report.principal_threads = 2 + report.stats.back().principal_threads;
  return report;
}

} // namespace cpt
