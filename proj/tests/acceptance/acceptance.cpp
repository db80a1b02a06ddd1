// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.
//
//   cpt-acceptance                 run everything
//   cpt-acceptance --only NAME     run one criterion
//   cpt-acceptance --list          list criterion names
//
// Exit status: 0 when nothing failed, 1 on any failure, 77 when every
// selected criterion was skipped.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "cpt/cluster/bench.hpp"
#include "cpt/cluster/client.hpp"
#include "cpt/cluster/image_codec.hpp"
#include "cpt/cluster/local_cluster.hpp"
#include "cpt/cluster/thread_registry.hpp"
#include "cpt/pipeline/pipeline.hpp"
#include "cpt/pipeline/ring_queue.hpp"
#include "cpt/protocol/codec.hpp"
#include "cpt/render/bvh.hpp"
#include "cpt/render/scene_io.hpp"
#include "support/message_gen.hpp"
#include "support/oracles.hpp"

using namespace cpt;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kSampleSplitRelErr = 1e-5;
constexpr double kScalingMinRatio = 3.0;
constexpr unsigned kScalingMinCores = 8;
constexpr double kRmseRatioLo = 0.40;
constexpr double kRmseRatioHi = 0.65;
constexpr double kFpsModelTolerance = 0.20;
constexpr double kPeriodTolerance = 0.15;
constexpr double kLatencyTolerance = 0.20;
constexpr double kRefitMaxFraction = 0.2;
constexpr std::uint32_t kReferenceSpp = 4096;

struct Options
{
  fs::path scene_dir = CPT_SCENE_DIR;
  fs::path cache_dir = CPT_ACCEPTANCE_CACHE;
  fs::path master_exe = CPT_MASTER_EXE;
  fs::path worker_exe = CPT_WORKER_EXE;
  bool force_scaling = false;
};

enum class Verdict
{
  pass,
  fail,
  skip
};

struct Outcome
{
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3)
{
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

ClientOptions client_for(const LocalCluster &cluster, std::uint64_t frames)
{
  ClientOptions c;
  c.connect = cluster.client_endpoint();
  c.frames = frames;
  c.keep_radiance = true;
  c.connect_timeout = 30s;
  c.frame_timeout = 120s;
  return c;
}

// Runs a LocalCluster with radiance-encoded frames and returns the first
// merged buffer plus the master-reported total spp.
std::pair<RadianceBuffer, std::uint32_t> cluster_frame(const Options &o, MasterOptions mo,
    std::size_t workers)
{
  mo.encoding = proto::ImageEncoding::radiance_f32;
  LocalCluster cluster(mo, workers, o.scene_dir);
  const RunReport report = run_client(client_for(cluster, 1));
  cluster.join();
  if (report.frames.size() != 1 || !report.frames[0].radiance || report.stats.empty())
    throw Error("cluster returned no frame: " + report.error);
  return {*report.frames[0].radiance, report.stats[0].total_spp};
}

MasterOptions gloss_master(const Options &o, Strategy strategy, std::uint32_t w, std::uint32_t h,
    std::uint32_t spp)
{
  MasterOptions mo;
  mo.scene = o.scene_dir / "gloss.json";
  mo.strategy = strategy;
  mo.width = w;
  mo.height = h;
  mo.spp = spp;
  mo.seed = 1;
  mo.threads = 0;
  return mo;
}

// ---------------------------------------------------------------------------

Outcome stride_bitwise(const Options &o)
{
  const auto t0 = Clock::now();
  const Scene scene = load_scene(o.scene_dir / "gloss.json");
  const Extent full{64, 64};
  const std::uint32_t spp = 2;
  std::string detail;
  bool ok = true;
  for (std::uint32_t n : {1u, 2u, 4u}) {
    const auto [merged, total] =
        cluster_frame(o, gloss_master(o, Strategy::stride, full.width, full.height, spp), n - 1);
    const StrideLayout layout = make_stride_layout(n, full);
    const RadianceBuffer ref =
        oracle::stride_oracle(scene, scene.camera, full, layout.w_n, layout.h_n, spp, 1);
    const bool same = merged.extent() == full && merged.spp == spp && merged.rgb == ref.rgb;
    ok = ok && same;
    detail += "n=" + std::to_string(n) + (same ? " equal; " : " DIFFERS; ");
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 30.0;
  return check(ok, detail + fmt(secs) + " s (limit 30 s)");
}

Outcome sample_split(const Options &o)
{
  const auto t0 = Clock::now();
  const Scene scene = load_scene(o.scene_dir / "gloss.json");
  const auto [merged, total] = cluster_frame(o, gloss_master(o, Strategy::sample, 64, 64, 8), 3);

  RenderRequest mono;
  mono.dims = {64, 64};
  mono.spp = 32;
  mono.seed_namespace = 1;
  mono.threads = 0;
  const RadianceBuffer ref = render_region(scene, scene.camera, mono);

  double worst = 0.0;
  for (std::uint32_t y = 0; y < 64; ++y)
    for (std::uint32_t x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) {
        const double a = merged.mean(x, y)[c], b = ref.mean(x, y)[c];
        const double err = b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b);
        worst = std::max(worst, err);
      }
  const double secs = seconds_since(t0);
  const bool ok = merged.spp == 32 && total == 32 && worst <= kSampleSplitRelErr && secs < 30.0;
  return check(ok, "spp " + std::to_string(merged.spp) + ", max rel err " + fmt(worst)
          + " (limit " + fmt(kSampleSplitRelErr) + "), " + fmt(secs) + " s (limit 30 s)");
}

Outcome fps_scaling(const Options &o)
{
  const unsigned cores = physical_cores();
  if (cores < kScalingMinCores && !o.force_scaling)
    return {Verdict::skip, "host has " + std::to_string(cores) + " physical core(s); needs "
            + std::to_string(kScalingMinCores)};
  const auto t0 = Clock::now();
  BenchOptions b;
  b.master_exe = o.master_exe;
  b.worker_exe = o.worker_exe;
  b.scene = o.scene_dir / "gloss.json";
  b.scene_dir = o.scene_dir;
  b.worker_counts = {1, 4};
  b.strategy = Strategy::stride;
  b.width = 160;
  b.height = 90;
  b.total_spp = 32;
  b.frames = 40;
  b.warmup_frames = 5;
  b.threads_per_node = 1;
  const auto rows = run_bench(b);
  if (rows.size() != 2 || !rows[0].ok || !rows[1].ok)
    return check(false, "bench failed: " + (rows.empty() ? std::string("no rows") : rows[0].error + rows.back().error));
  const double ratio = rows[1].fps / rows[0].fps;
  const double secs = seconds_since(t0);
  return check(ratio >= kScalingMinRatio && secs < 180.0,
      "fps(1w) " + fmt(rows[0].fps) + ", fps(4w) " + fmt(rows[1].fps) + ", ratio " + fmt(ratio)
          + " (min " + fmt(kScalingMinRatio) + "), " + std::to_string(cores) + " cores, "
          + fmt(secs) + " s");
}

RadianceBuffer cached_reference(const Options &o, const Scene &scene, Extent dims)
{
  std::ostringstream name;
  name << "reference_" << scene.name << "_" << dims.width << "x" << dims.height << "_"
       << kReferenceSpp << "_" << std::hex << scene_state_hash(scene) << ".pfm";
  const fs::path path = o.cache_dir / name.str();
  if (fs::exists(path))
    return read_pfm(path);
  RenderRequest r;
  r.dims = dims;
  r.spp = kReferenceSpp;
  r.seed_namespace = 0x5eed'cafe'f00dull;
  r.threads = 0;
  const RadianceBuffer ref = render_region(scene, scene.camera, r);
  fs::create_directories(o.cache_dir);
  write_pfm(path, ref);
  return read_pfm(path);
}

Outcome quality_scaling(const Options &o)
{
  const auto t0 = Clock::now();
  const Scene scene = load_scene(o.scene_dir / "gloss.json");
  const Extent dims{64, 64};
  const std::uint32_t per_node = 4;
  const RadianceBuffer ref = cached_reference(o, scene, dims);

  const auto [one, total1] = cluster_frame(o, gloss_master(o, Strategy::sample, 64, 64, per_node), 0);
  const auto [four, total4] = cluster_frame(o, gloss_master(o, Strategy::sample, 64, 64, per_node), 3);
  const double e1 = rmse(one, ref), e4 = rmse(four, ref);
  const double ratio = e4 / e1;
  const bool spp_exact = total1 == per_node && total4 == 4 * per_node && one.spp == total1
      && four.spp == total4;
  const double secs = seconds_since(t0);
  return check(spp_exact && ratio >= kRmseRatioLo && ratio <= kRmseRatioHi && secs < 300.0,
      "total spp " + std::to_string(total1) + " -> " + std::to_string(total4) + ", RMSE "
          + fmt(e1) + " -> " + fmt(e4) + ", ratio " + fmt(ratio) + " (bracket ["
          + fmt(kRmseRatioLo) + ", " + fmt(kRmseRatioHi) + "]), " + fmt(secs) + " s");
}

Outcome fps_model(const Options &o)
{
  MasterOptions mo;
  mo.scene = o.scene_dir / "deform.json";
  mo.strategy = Strategy::stride;
  mo.width = 160;
  mo.height = 90;
  mo.spp = 2;
  mo.threads = 0;
  mo.encoding = proto::ImageEncoding::png;
  LocalCluster cluster(mo, 1, o.scene_dir);
  ClientOptions c = client_for(cluster, 60);
  c.keep_radiance = false;
  const RunReport report = run_client(c);
  cluster.join();
  const std::size_t warm = 10;
  if (report.frames.size() != 60 || report.stats.size() != 60)
    return check(false, "run incomplete: " + report.error);
  const double span = report.frames.back().received_s - report.frames[warm].received_s;
  const double measured = double(report.frames.size() - 1 - warm) / span;
  double update = 0, render = 0;
  for (std::size_t i = warm; i < report.stats.size(); ++i) {
    update += report.stats[i].scene_update_ms;
    render += report.stats[i].render_ms();
  }
  const double n = double(report.stats.size() - warm);
  const double predicted = predicted_fps(update / n, render / n);
  const double dev = std::abs(measured - predicted) / predicted;
  return check(dev <= kFpsModelTolerance,
      "measured " + fmt(measured) + " fps, predicted 0.9/(" + fmt(update / n) + " + "
          + fmt(render / n) + " ms) = " + fmt(predicted) + " fps, deviation " + fmt(100 * dev)
          + "% (limit " + fmt(100 * kFpsModelTolerance) + "%)");
}

PipelineSpec stub_stages(std::initializer_list<int> ms)
{
  PipelineSpec spec;
  int i = 0;
  for (int d : ms)
    spec.stages.push_back({"stage" + std::to_string(i++),
        [d](std::uint64_t) { std::this_thread::sleep_for(std::chrono::milliseconds(d)); }});
  return spec;
}

Outcome pipeline_algebra(const Options &)
{
  const auto t0 = Clock::now();
  const PipelineStats a = run_pipeline(stub_stages({10, 30, 20}), 60);
  const PipelineStats b = run_pipeline(stub_stages({30, 30, 30}), 60);
  auto within = [](double v, double target, double tol) { return std::abs(v - target) <= tol * target; };
  const double secs = seconds_since(t0);
  const bool ok = within(a.frame_period_ms, 30, kPeriodTolerance)
      && within(a.latency_ms, 60, kLatencyTolerance)
      && within(b.frame_period_ms, 30, kPeriodTolerance) && secs < 10.0;
  return check(ok, "(10,30,20): period " + fmt(a.frame_period_ms) + " ms, latency "
          + fmt(a.latency_ms) + " ms; (30,30,30): period " + fmt(b.frame_period_ms)
          + " ms, latency " + fmt(b.latency_ms) + " ms; " + fmt(secs) + " s (limit 10 s)");
}

Outcome ring_queue_stress(const Options &)
{
  const auto t0 = Clock::now();
  constexpr std::uint64_t kItems = 1000000;
  RingQueue<std::uint64_t> q(64);
  std::atomic<bool> over{false};
  std::jthread producer([&] {
    for (std::uint64_t i = 0; i < kItems; ++i) {
      std::uint64_t v = i;
      while (q.push_blocking(v, 1s) != PushResult::accepted) {}
      if (q.size() > q.capacity())
        over = true;
    }
  });
  std::uint64_t received = 0, out_of_order = 0;
  while (received < kItems) {
    std::uint64_t v;
    if (q.pop_blocking(v, 5s) != PopStatus::item)
      break;
    out_of_order += v != received;
    ++received;
    if (q.size() > q.capacity())
      over = true;
  }
  producer.join();
  const double secs = seconds_since(t0);
  const bool ok = received == kItems && out_of_order == 0 && !over && q.empty() && secs < 10.0;
  return check(ok, std::to_string(received) + " received, " + std::to_string(out_of_order)
          + " out of order, bound " + (over ? "VIOLATED" : "held") + ", " + fmt(secs)
          + " s (limit 10 s)");
}

Outcome protocol(const Options &)
{
  const auto t0 = Clock::now();
  test::Gen gen(20260101);
  std::size_t round_trips = 0, failures = 0;
  for (int i = 0; i < 16000; ++i) {
    const proto::Message m = gen.message(i % 8);
    const auto bytes = proto::encode(m);
    const auto r = proto::decode(bytes);
    failures += !(r.status == proto::DecodeStatus::ok && r.message && *r.message == m
        && r.consumed == bytes.size());
    ++round_trips;
  }
  std::size_t fuzz = 0, crashes = 0;
  for (int i = 0; i < 50000; ++i) {
    std::vector<std::uint8_t> b = proto::encode(gen.message(i % 8));
    for (std::uint32_t flips = 1 + gen.u32(3); flips > 0; --flips)
      b[gen.u32(std::uint32_t(b.size() - 1))] ^= std::uint8_t(1u << gen.u32(7));
    if (i % 4 == 0)
      b.resize(gen.u32(std::uint32_t(b.size())));
    try {
      const auto r = proto::decode(b);
      crashes += r.status == proto::DecodeStatus::ok && r.consumed > b.size();
      proto::FrameReader reader;
      reader.feed(b);
      try {
        while (reader.next()) {}
      } catch (const proto::ProtocolError &) {
      }
    } catch (...) {
      ++crashes;
    }
    ++fuzz;
  }
  const std::vector<std::uint8_t> golden{'C', 'P', 'T', '1', 8, 4, 0, 0, 0, 0, 0, 0, 0};
  const bool golden_ok = proto::encode(proto::Shutdown{}) == golden;
  const double secs = seconds_since(t0);
  return check(failures == 0 && crashes == 0 && golden_ok && secs < 30.0,
      std::to_string(round_trips) + " round trips (" + std::to_string(failures) + " failed), "
          + std::to_string(fuzz) + " fuzzed frames (" + std::to_string(crashes)
          + " crashes), golden " + (golden_ok ? "ok" : "MISMATCH") + ", " + fmt(secs)
          + " s (limit 30 s)");
}

template <typename Fn>
double median_ms(int reps, Fn &&fn)
{
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    t.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

Outcome bvh_refit(const Options &)
{
  TriangleMesh mesh = oracle::grid_mesh(224, 8.f); // 100352 triangles
  oracle::displace(mesh, 0.05f);
  const Bvh built = build_bvh(mesh);
  TriangleMesh deformed = mesh;
  oracle::displace(deformed, 0.1f, 4.f, 1.3f);

  Bvh refit = built;
  refit_bvh(refit, deformed);
  const Bvh rebuilt = build_bvh(deformed);
  std::size_t mismatches = 0, hits = 0;
  for (const Ray &ray : oracle::random_rays(10000, 77, 4.f)) {
    const auto a = intersect(refit, deformed, ray);
    const auto b = intersect(rebuilt, deformed, ray);
    mismatches += bool(a) != bool(b) || (a && (a->primitive != b->primitive || a->t != b->t));
    hits += bool(a);
  }
  Bvh scratch = built;
  const double refit_ms = median_ms(7, [&] { refit_bvh(scratch, deformed); });
  const double rebuild_ms = median_ms(5, [&] { scratch = build_bvh(deformed); });
  const double fraction = refit_ms / rebuild_ms;
  return check(mismatches == 0 && fraction <= kRefitMaxFraction,
      std::to_string(mesh.triangle_count()) + " triangles, 10000 rays (" + std::to_string(hits)
          + " hits, " + std::to_string(mismatches) + " mismatches), refit " + fmt(refit_ms)
          + " ms vs rebuild " + fmt(rebuild_ms) + " ms = " + fmt(fraction) + " (max "
          + fmt(kRefitMaxFraction) + ")");
}

Outcome thread_census(const Options &o)
{
  std::string detail;
  bool ok = true;
  for (std::size_t w : {1u, 2u, 4u}) {
    auto &reg = ThreadRegistry::global();
    reg.reset_peak();
    MasterOptions mo = gloss_master(o, Strategy::sample, 32, 16, 1);
    LocalCluster cluster(mo, w, o.scene_dir);
    ClientOptions c = client_for(cluster, 4);
    c.keep_radiance = false;
    const RunReport report = run_client(c);
    cluster.join();
    const std::size_t expect = 4 + 3 * w;
    const bool good = reg.peak() == expect && report.principal_threads == expect;
    ok = ok && good;
    detail += "w=" + std::to_string(w) + ": registry " + std::to_string(reg.peak()) + ", reported "
        + std::to_string(report.principal_threads) + ", expected " + std::to_string(expect) + "; ";
  }
  return check(ok, detail);
}

struct Criterion
{
  const char *name;
  Outcome (*run)(const Options &);
};

const Criterion kCriteria[] = {
    {"stride_bitwise", stride_bitwise},
    {"sample_split", sample_split},
    {"fps_scaling", fps_scaling},
    {"quality_scaling", quality_scaling},
    {"fps_model", fps_model},
    {"pipeline_algebra", pipeline_algebra},
    {"ring_queue_stress", ring_queue_stress},
    {"protocol", protocol},
    {"bvh_refit", bvh_refit},
    {"thread_census", thread_census},
};

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"clusterpt acceptance suite"};
  Options o;
  std::vector<std::string> only;
  bool list = false;
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--list", list, "List criteria and exit");
  app.add_option("--scene-dir", o.scene_dir);
  app.add_option("--cache-dir", o.cache_dir, "Where the reference render is cached");
  app.add_option("--master-exe", o.master_exe);
  app.add_option("--worker-exe", o.worker_exe);
  app.add_flag("--force-scaling", o.force_scaling, "Run fps_scaling on small hosts too");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const Criterion &c : kCriteria)
      std::cout << c.name << '\n';
    return 0;
  }
  for (const std::string &name : only)
    if (std::none_of(std::begin(kCriteria), std::end(kCriteria),
            [&](const Criterion &c) { return name == c.name; })) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }

  int passed = 0, failed = 0, skipped = 0;
  for (const Criterion &c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end())
      continue;
    Outcome out;
    try {
      out = c.run(o);
    } catch (const std::exception &e) {
      out = {Verdict::fail, std::string("error: ") + e.what()};
    }
    const char *tag = out.verdict == Verdict::pass ? "PASS" : out.verdict == Verdict::skip ? "SKIP" : "FAIL";
    std::cout << tag << "  " << std::left << std::setw(18) << c.name << out.detail << std::endl;
    (out.verdict == Verdict::pass ? passed : out.verdict == Verdict::skip ? skipped : failed)++;
  }
  std::cout << passed << " passed, " << failed << " failed, " << skipped << " skipped\n";
  if (failed)
    return 1;
  return passed == 0 && skipped > 0 ? 77 : 0;
}
