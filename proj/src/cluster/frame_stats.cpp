// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/frame_stats.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cpt/common/error.hpp"

namespace cpt {

double predicted_fps(double scene_update_ms, double render_ms)
{
  const double s = (scene_update_ms + render_ms) / 1000.0;
  return s > 0 ? 0.9 / s : 0.0;
}

double FrameStats::render_ms() const
{
  return worker_render_ms.empty() ? master_render_ms
                                  : std::max(master_render_ms, worker_render_mean_ms);
}

double FrameStats::predicted_fps() const { return cpt::predicted_fps(scene_update_ms, render_ms()); }

namespace {

// Named scalar fields in message order.
std::vector<std::pair<std::string, double>> scalar_fields(const FrameStats &s)
{
  return {
      {"master_render_ms", s.master_render_ms},
      {"worker_render_mean_ms", s.worker_render_mean_ms},
      {"scene_update_ms", s.scene_update_ms},
      {"merge_ms", s.merge_ms},
      {"denoise_ms", s.denoise_ms},
      {"tone_map_ms", s.tone_map_ms},
      {"compression_ms", s.compression_ms},
      {"distribution_overhead_ms", s.distribution_overhead_ms},
      {"forward_ms", s.forward_ms},
      {"client_fps", s.client_fps},
      {"frame_period_ms", s.frame_period_ms},
      {"total_spp", double(s.total_spp)},
      {"upstream_bytes", double(s.upstream_bytes)},
      {"principal_threads", double(s.principal_threads)},
      {"predicted_fps", s.predicted_fps()},
      {"render_start_ms", s.render_start_ms},
      {"render_end_ms", s.render_end_ms},
      {"post_start_ms", s.post_start_ms},
      {"post_end_ms", s.post_end_ms},
  };
}

std::string worker_field(std::size_t i) { return "worker_render_ms_" + std::to_string(i); }

} // namespace

proto::Stats FrameStats::to_message() const
{
  proto::Stats m;
  m.frame_id = frame_id;
  m.fields = scalar_fields(*this);
  for (std::size_t i = 0; i < worker_render_ms.size(); ++i)
    m.fields.emplace_back(worker_field(i), worker_render_ms[i]);
  return m;
}

FrameStats FrameStats::from_message(const proto::Stats &m)
{
  FrameStats s;
  s.frame_id = m.frame_id;
  auto get = [&](const char *name) { return m.get(name).value_or(0.0); };
  s.master_render_ms = get("master_render_ms");
  s.worker_render_mean_ms = get("worker_render_mean_ms");
  s.scene_update_ms = get("scene_update_ms");
  s.merge_ms = get("merge_ms");
  s.denoise_ms = get("denoise_ms");
  s.tone_map_ms = get("tone_map_ms");
  s.compression_ms = get("compression_ms");
  s.distribution_overhead_ms = get("distribution_overhead_ms");
  s.forward_ms = get("forward_ms");
  s.client_fps = get("client_fps");
  s.frame_period_ms = get("frame_period_ms");
  s.total_spp = static_cast<std::uint32_t>(get("total_spp"));
  s.upstream_bytes = static_cast<std::uint64_t>(get("upstream_bytes"));
  s.principal_threads = static_cast<std::uint32_t>(get("principal_threads"));
  s.render_start_ms = get("render_start_ms");
  s.render_end_ms = get("render_end_ms");
  s.post_start_ms = get("post_start_ms");
  s.post_end_ms = get("post_end_ms");
  for (std::size_t i = 0;; ++i) {
    const auto v = m.get(worker_field(i));
    if (!v)
      break;
    s.worker_render_ms.push_back(*v);
  }
  return s;
}

std::vector<std::string> frame_stats_columns(std::size_t workers)
{
  std::vector<std::string> cols{"frame_id"};
  for (const auto &[name, value] : scalar_fields(FrameStats{}))
    cols.push_back(name);
  for (std::size_t i = 0; i < workers; ++i)
    cols.push_back(worker_field(i));
  return cols;
}

std::string frame_stats_csv(std::span<const FrameStats> rows)
{
  const std::size_t workers = rows.empty() ? 0 : rows.front().worker_render_ms.size();
  std::ostringstream out;
  const auto cols = frame_stats_columns(workers);
  for (std::size_t i = 0; i < cols.size(); ++i)
    out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const FrameStats &r : rows) {
    out << r.frame_id;
    for (const auto &[name, value] : scalar_fields(r))
      out << ',' << value;
    for (std::size_t i = 0; i < workers; ++i)
      out << ',' << (i < r.worker_render_ms.size() ? r.worker_render_ms[i] : 0.0);
    out << '\n';
  }
  return out.str();
}

std::string frame_stats_json(std::span<const FrameStats> rows)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const FrameStats &r : rows) {
    nlohmann::json j;
    j["frame_id"] = r.frame_id;
    for (const auto &[name, value] : scalar_fields(r))
      j[name] = value;
    j["worker_render_ms"] = r.worker_render_ms;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void write_frame_stats(const std::filesystem::path &path, std::span<const FrameStats> rows)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write stats to " + path.string());
  out << (path.extension() == ".json" ? frame_stats_json(rows) : frame_stats_csv(rows));
}

void FpsWindow::add(double t)
{
  times_.push_back(t);
  if (times_.size() > window_ + 1)
    times_.erase(times_.begin());
}

double FpsWindow::fps() const
{
  if (times_.size() < 2)
    return 0.0;
  const double span = times_.back() - times_.front();
  return span > 0 ? double(times_.size() - 1) / span : 0.0;
}

double FpsWindow::mean_period_ms() const
{
  const double f = fps();
  return f > 0 ? 1000.0 / f : 0.0;
}

} // namespace cpt
