// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cpt/common/error.hpp"
#include "cpt/render/bvh.hpp"
#include "cpt/render/camera.hpp"
#include "cpt/render/scene.hpp"
#include "cpt/render/scene_io.hpp"
#include "cpt/render/scene_update.hpp"
#include "cpt/render/tone_map.hpp"
#include "cpt/render/tracer.hpp"
#include "support/oracles.hpp"

using namespace cpt;

namespace {

Scene empty_scene(Vec3 env)
{
  Scene s;
  s.name = "empty";
  s.materials.push_back({});
  s.environment.kind = Environment::Kind::constant;
  s.environment.top = env;
  s.camera = {{0.f, 1.f, 4.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 50.f};
  return s;
}

RenderRequest full_request(Extent dims, std::uint32_t spp, std::uint64_t seed = 7)
{
  RenderRequest r;
  r.dims = dims;
  r.spp = spp;
  r.seed_namespace = seed;
  r.threads = 1;
  return r;
}

Scene gloss() { return load_scene(std::filesystem::path(CPT_SCENE_DIR) / "gloss.json"); }
Scene deform() { return load_scene(std::filesystem::path(CPT_SCENE_DIR) / "deform.json"); }

// Every node's box contains its children or primitives; every primitive
// appears in exactly one leaf.
void check_bvh_invariants(const Bvh &bvh, const TriangleMesh &mesh)
{
  REQUIRE_FALSE(bvh.nodes.empty());
  std::vector<int> seen(mesh.triangle_count(), 0);
  std::vector<std::uint32_t> stack{0};
  std::size_t visited = 0;
  while (!stack.empty()) {
    const std::uint32_t i = stack.back();
    stack.pop_back();
    ++visited;
    const BvhNode &n = bvh.nodes[i];
    if (n.is_leaf()) {
      for (std::uint32_t j = n.first; j < n.first + n.count; ++j) {
        const std::uint32_t prim = bvh.prim_index[j];
        ++seen[prim];
        CHECK(n.bounds.contains(mesh.triangle_bounds(prim)));
      }
    } else {
      REQUIRE(n.first + 1 < bvh.nodes.size());
      CHECK(n.first > i);
      CHECK(n.bounds.contains(bvh.nodes[n.first].bounds));
      CHECK(n.bounds.contains(bvh.nodes[n.first + 1].bounds));
      stack.push_back(n.first);
      stack.push_back(n.first + 1);
    }
  }
  CHECK(visited == bvh.nodes.size());
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

} // namespace

TEST_CASE("constant environment renders exactly its radiance")
{
  Scene s = empty_scene({1.f, 1.f, 1.f});
  s.validate();
  for (const Camera &cam : {s.camera, Camera{{3.f, -2.f, 1.f}, {0.f, 5.f, 0.f}, {0.f, 0.f, 1.f}, 120.f}}) {
    const RadianceBuffer rb = render_region(s, cam, full_request({16, 12}, 3));
    CHECK(rb.spp == 3);
    for (std::uint32_t y = 0; y < rb.height; ++y)
      for (std::uint32_t x = 0; x < rb.width; ++x)
        CHECK(rb.mean(x, y) == Vec3{1.f, 1.f, 1.f});
  }
}

TEST_CASE("emissive quad filling the frame renders its emission")
{
  Scene s = empty_scene({0.f, 0.f, 0.f});
  Material glow;
  glow.kind = MaterialKind::emissive;
  glow.emission = {2.f, 0.f, 0.f};
  s.materials.push_back(glow);
  TriangleMesh quad;
  quad.positions = {{-50.f, -50.f, 0.f}, {50.f, -50.f, 0.f}, {50.f, 50.f, 0.f}, {-50.f, 50.f, 0.f}};
  quad.indices = {{0, 1, 2}, {0, 2, 3}};
  quad.material = 1;
  s.meshes.push_back(quad);
  s.camera = {{0.f, 0.f, 5.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 60.f};
  s.build_acceleration();
  s.validate();
  for (std::uint32_t depth : {1u, 2u, 10u}) {
    RenderRequest r = full_request({8, 8}, 1);
    r.max_depth = depth;
    const RadianceBuffer rb = render_region(s, s.camera, r);
    for (std::uint32_t y = 0; y < 8; ++y)
      for (std::uint32_t x = 0; x < 8; ++x)
        CHECK(rb.mean(x, y) == Vec3{2.f, 0.f, 0.f});
  }
}

TEST_CASE("furnace: diffuse sphere under a uniform environment")
{
  // A convex diffuse sphere lit by constant radiance 1 reflects albedo * 1.
  // With albedo 1 it disappears into the background.
  for (float albedo : {1.f, 0.5f}) {
    Scene s = empty_scene({1.f, 1.f, 1.f});
    s.materials[0].albedo = Vec3{albedo};
    s.spheres.push_back({{0.f, 0.f, 0.f}, 1.f, 0});
    s.camera = {{0.f, 0.f, 3.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 20.f};
    s.validate();
    const RadianceBuffer rb = render_region(s, s.camera, full_request({8, 8}, 4096));
    // Central pixels see only the sphere.
    for (std::uint32_t y = 3; y < 5; ++y)
      for (std::uint32_t x = 3; x < 5; ++x) {
        const Vec3 m = rb.mean(x, y);
        for (int c = 0; c < 3; ++c)
          CHECK(std::abs(m[c] - albedo) <= 0.02f * albedo);
      }
  }
}

TEST_CASE("closed scene stays under the energy bound")
{
  // Camera inside a closed diffuse sphere with a light inside it.
  Scene s = empty_scene({0.f, 0.f, 0.f});
  const float max_albedo = 0.7f;
  s.materials[0].albedo = {max_albedo, 0.5f, 0.3f};
  s.spheres.push_back({{0.f, 0.f, 0.f}, 5.f, 0});
  const Vec3 emission{1.f, 1.f, 1.f};
  s.lights.push_back({{-0.5f, 3.f, -0.5f}, {1.f, 0.f, 0.f}, {0.f, 0.f, 1.f}, emission});
  s.camera = {{0.f, 0.f, 2.f}, {0.f, 1.f, 0.f}, {0.f, 1.f, 0.f}, 90.f};
  s.validate();
  const RadianceBuffer rb = render_region(s, s.camera, full_request({16, 16}, 64));
  CHECK(rb.all_finite());
  const float bound = max_component(emission) / (1.f - max_albedo);
  float peak = 0.f;
  double total = 0.0;
  for (std::uint32_t y = 0; y < rb.height; ++y)
    for (std::uint32_t x = 0; x < rb.width; ++x) {
      peak = std::max(peak, max_component(rb.mean(x, y)));
      total += rb.mean(x, y).x;
    }
  CHECK(peak <= bound);
  CHECK(total > 0.0);
}

TEST_CASE("render is independent of thread count and partition")
{
  const Scene s = gloss();
  RenderRequest r = full_request({32, 24}, 2, 99);
  const RadianceBuffer one = render_region(s, s.camera, r);
  r.threads = 3;
  CHECK(render_region(s, s.camera, r) == one);
  CHECK(one.all_finite());

  // Stitch four uneven regions.
  RadianceBuffer stitched(32, 24, 2);
  const PixelRect rects[] = {{0, 0, 7, 24}, {7, 0, 25, 5}, {7, 5, 25, 18}, {7, 23, 25, 1}};
  for (const PixelRect &rect : rects) {
    RenderRequest part = full_request({32, 24}, 2, 99);
    part.rect = rect;
    const RadianceBuffer b = render_region(s, s.camera, part);
    REQUIRE(b.width == rect.width);
    REQUIRE(b.height == rect.height);
    for (std::uint32_t y = 0; y < rect.height; ++y)
      for (std::uint32_t x = 0; x < rect.width; ++x)
        stitched.set(rect.x + x, rect.y + y, b.sum(x, y));
  }
  CHECK(stitched.rgb == one.rgb);
}

TEST_CASE("max_depth 1 only sees directly visible emission")
{
  const Scene s = gloss();
  RenderRequest r = full_request({16, 16}, 4);
  r.max_depth = 1;
  const RadianceBuffer direct = render_region(s, s.camera, r);
  r.max_depth = 10;
  const RadianceBuffer full = render_region(s, s.camera, r);
  CHECK(direct != full);
}

TEST_CASE("camera ray: identity transform goes through the pixel center")
{
  const Camera cam{{1.f, 2.f, 6.f}, {0.f, 0.5f, 0.f}, {0.f, 1.f, 0.f}, 45.f};
  const Extent dims{32, 18};
  const double aspect = 32.0 / 18.0;
  const double tan_half = std::tan(45.0 * M_PI / 360.0);
  // Independent pinhole basis in double.
  const double f0[3] = {-1.0, -1.5, -6.0};
  const double fl = std::sqrt(f0[0] * f0[0] + f0[1] * f0[1] + f0[2] * f0[2]);
  const double f[3] = {f0[0] / fl, f0[1] / fl, f0[2] / fl};
  double rt[3] = {-f[2], 0.0, f[0]}; // f x (0,1,0)
  const double rl = std::sqrt(rt[0] * rt[0] + rt[2] * rt[2]);
  rt[0] /= rl;
  rt[2] /= rl;
  const double up[3] = {rt[1] * f[2] - rt[2] * f[1], rt[2] * f[0] - rt[0] * f[2],
      rt[0] * f[1] - rt[1] * f[0]};
  for (std::uint32_t py : {0u, 5u, 17u})
    for (std::uint32_t px : {0u, 13u, 31u}) {
      const ScreenSample ss = screen_sample(dims, px, py, 0.5f, 0.5f, PixelTransform::identity());
      CHECK(ss.x == doctest::Approx((px + 0.5) / 32.0).epsilon(1e-6));
      CHECK(ss.y == doctest::Approx((py + 0.5) / 18.0).epsilon(1e-6));
      const double cx = (2.0 * (px + 0.5) / 32.0 - 1.0) * tan_half * aspect;
      const double cy = (1.0 - 2.0 * (py + 0.5) / 18.0) * tan_half;
      double d[3];
      for (int i = 0; i < 3; ++i)
        d[i] = f[i] + rt[i] * cx + up[i] * cy;
      const double dl = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      const Ray ray =
          sample_camera_ray(cam, dims, px, py, 0.5f, 0.5f, PixelTransform::identity());
      CHECK(ray.origin == cam.position);
      for (int i = 0; i < 3; ++i)
        CHECK(ray.dir[i] == doctest::Approx(d[i] / dl).epsilon(1e-5));
    }
}

TEST_CASE("camera ray: scale 0.5 translate 0.5 starts at the corner cell")
{
  const PixelTransform xf{0.5f, 0.5f, 0.5f, 0.5f};
  xf.validate();
  const Extent dims{10, 10};
  const ScreenSample s = screen_sample(dims, 3, 7, 0.f, 0.f, xf);
  CHECK(s.x == doctest::Approx(3.5 / 10.0));
  CHECK(s.y == doctest::Approx(7.5 / 10.0));
  const ScreenSample e = screen_sample(dims, 3, 7, 0.999f, 0.999f, xf);
  CHECK(e.x < 4.f / 10.f);
  CHECK(e.y < 8.f / 10.f);
}

TEST_CASE("pixel transform validation")
{
  CHECK_THROWS_AS((PixelTransform{0.f, 1.f, 0.f, 0.f}.validate()), StructuralError);
  CHECK_THROWS_AS((PixelTransform{0.5f, 0.5f, 0.75f, 0.f}.validate()), StructuralError);
  CHECK_THROWS_AS((PixelTransform{1.f, 1.f, 1.f, 0.f}.validate()), StructuralError);
  CHECK_NOTHROW(PixelTransform::identity().validate());
}

TEST_CASE("2x2 stride transforms tile the pixel footprint")
{
  // Bin random samples from all four transforms into an 8x8 grid over the
  // pixel; every bin must be covered by exactly one transform.
  const Extent dims{1, 1};
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u01(0.f, std::nextafter(1.f, 0.f));
  int owner[8][8];
  std::fill(&owner[0][0], &owner[0][0] + 64, -1);
  bool conflict = false;
  for (std::uint32_t k = 0; k < 4; ++k) {
    const auto c = oracle::stride_cell(k, 2, 2);
    const PixelTransform xf{c.sx, c.sy, c.tx, c.ty};
    for (int i = 0; i < 20000; ++i) {
      const ScreenSample s = screen_sample(dims, 0, 0, u01(rng), u01(rng), xf);
      REQUIRE(s.x >= 0.f);
      REQUIRE(s.x < 1.f);
      REQUIRE(s.y >= 0.f);
      REQUIRE(s.y < 1.f);
      int &o = owner[int(s.y * 8)][int(s.x * 8)];
      if (o != -1 && o != int(k))
        conflict = true;
      o = int(k);
    }
  }
  CHECK_FALSE(conflict);
  for (auto &row : owner)
    for (int o : row)
      CHECK(o != -1);
}

TEST_CASE("tone map")
{
  CHECK(tone_map_channel(0.f) == 0);
  CHECK(oracle::tone_map_reference(1.0) == 188);
  CHECK(tone_map_channel(1.f) == 188);
  for (double m : {0.001, 0.01, 0.1, 0.3, 2.0, 7.5, 100.0})
    CHECK(int(tone_map_channel(float(m))) == oracle::tone_map_reference(m));
  int prev = 0;
  for (int i = 0; i <= 20000; ++i) {
    const int v = tone_map_channel(float(i) * 1e-3f);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(tone_map_channel(1e30f) == 255);

  const RadianceBuffer rb = render_region(gloss(), gloss().camera, full_request({12, 8}, 3));
  RadianceBuffer doubled = rb;
  doubled.spp *= 2;
  for (float &c : doubled.rgb)
    c *= 2.f;
  CHECK(tone_map(rb) == tone_map(doubled));
  const Image8 img = tone_map(rb);
  CHECK(img.width == 12);
  CHECK(img.rgb.size() == 12u * 8u * 3u);
}

TEST_CASE("bvh: single triangle")
{
  TriangleMesh m;
  m.positions = {{0.f, 0.f, 0.f}, {1.f, 0.f, 0.f}, {0.f, 2.f, 1.f}};
  m.indices = {{0, 1, 2}};
  const Bvh bvh = build_bvh(m);
  REQUIRE(bvh.nodes.size() == 1);
  CHECK(bvh.nodes[0].is_leaf());
  CHECK(bvh.nodes[0].bounds == m.triangle_bounds(0));
}

TEST_CASE("bvh: two disjoint triangles")
{
  TriangleMesh m;
  m.positions = {{0.f, 0.f, 0.f}, {1.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, {10.f, 0.f, 5.f},
      {11.f, 0.f, 5.f}, {10.f, 1.f, 6.f}};
  m.indices = {{0, 1, 2}, {3, 4, 5}};
  const Bvh bvh = build_bvh(m);
  check_bvh_invariants(bvh, m);
  Aabb u = m.triangle_bounds(0);
  u.extend(m.triangle_bounds(1));
  CHECK(bvh.nodes[0].bounds == u);
}

TEST_CASE("bvh: 1000 triangles reachable exactly once")
{
  const TriangleMesh m = oracle::random_soup(1000, 11);
  const Bvh bvh = build_bvh(m);
  check_bvh_invariants(bvh, m);
  std::vector<std::uint32_t> perm = bvh.prim_index;
  std::sort(perm.begin(), perm.end());
  for (std::uint32_t i = 0; i < perm.size(); ++i)
    CHECK(perm[i] == i);
  CHECK(build_bvh(m).nodes.size() == bvh.nodes.size());
  CHECK(build_bvh(m).prim_index == bvh.prim_index);
}

TEST_CASE("bvh: structural errors")
{
  CHECK_THROWS_AS(build_bvh(TriangleMesh{}), StructuralError);
  TriangleMesh bad;
  bad.positions = {{0.f, 0.f, 0.f}};
  bad.indices = {{0, 0, 3}};
  CHECK_THROWS_AS(build_bvh(bad), StructuralError);
}

TEST_CASE("bvh: degenerate triangles are counted and never hit")
{
  TriangleMesh m = oracle::random_soup(10, 3);
  m.positions.push_back({0.f, 0.f, 0.f});
  m.positions.push_back({1.f, 0.f, 0.f});
  m.positions.push_back({2.f, 0.f, 0.f});
  m.indices.push_back({30, 31, 32});
  const Bvh bvh = build_bvh(m);
  CHECK(bvh.degenerate_count == 1);
  check_bvh_invariants(bvh, m);
  const Ray down{{1.f, 1.f, 0.f}, {0.f, -1.f, 0.f}};
  const auto h = intersect(bvh, m, down);
  CHECK((!h || h->primitive != 10));
}

TEST_CASE("intersect: miss and single-primitive oracle")
{
  TriangleMesh m;
  m.positions = {{-1.f, -1.f, 0.f}, {2.f, -0.5f, 0.5f}, {0.f, 1.5f, -0.25f}};
  m.indices = {{0, 1, 2}};
  const Bvh bvh = build_bvh(m);
  CHECK_FALSE(intersect(bvh, m, Ray{{0.f, 0.f, 5.f}, {0.f, 1.f, 0.f}}));
  CHECK_FALSE(occluded(bvh, m, Ray{{0.f, 0.f, 5.f}, {0.f, 1.f, 0.f}}));

  const Vec3 centroid = (m.positions[0] + m.positions[1] + m.positions[2]) / 3.f;
  const Vec3 origin{0.3f, 0.2f, 4.f};
  const Ray ray{origin, normalize(centroid - origin)};
  const auto hit = intersect(bvh, m, ray);
  const auto ref = oracle::reference_triangle(ray, m.positions[0], m.positions[1], m.positions[2]);
  REQUIRE(hit);
  REQUIRE(ref);
  CHECK(hit->primitive == 0);
  CHECK(hit->t == doctest::Approx(ref->t).epsilon(1e-5));
  CHECK(hit->u == doctest::Approx(ref->u).epsilon(1e-4));
  CHECK(hit->v == doctest::Approx(ref->v).epsilon(1e-4));
  CHECK(ref->u == doctest::Approx(1.0 / 3).epsilon(1e-4));
  const Vec3 n = normalize(cross(m.positions[1] - m.positions[0], m.positions[2] - m.positions[0]));
  CHECK(dot(hit->normal, n) == doctest::Approx(1.f));
  CHECK(occluded(bvh, m, ray));
  Ray short_ray = ray;
  short_ray.tmax = float(ref->t) * 0.5f;
  CHECK_FALSE(intersect(bvh, m, short_ray));
}

TEST_CASE("intersect: 1e5 random rays match a linear scan")
{
  const TriangleMesh m = oracle::random_soup(400, 21);
  const Bvh bvh = build_bvh(m);
  const auto rays = oracle::random_rays(100000, 22);
  std::size_t hits = 0, mismatches = 0;
  for (const Ray &ray : rays) {
    const auto a = intersect(bvh, m, ray);
    const auto b = oracle::linear_scan(m, ray);
    if (bool(a) != bool(b)) {
      ++mismatches;
      continue;
    }
    if (!a)
      continue;
    ++hits;
    if (a->primitive != b->primitive || std::abs(a->t - b->t) > 1e-6f)
      ++mismatches;
  }
  CHECK(mismatches == 0);
  CHECK(hits > 10000);
}

TEST_CASE("refit: no-op, rigid translation, rebuild oracle, topology")
{
  TriangleMesh m = oracle::grid_mesh(40);
  oracle::displace(m, 0.05f);
  Bvh bvh = build_bvh(m);
  const Bvh original = bvh;

  refit_bvh(bvh, m);
  REQUIRE(bvh.nodes.size() == original.nodes.size());
  for (std::size_t i = 0; i < bvh.nodes.size(); ++i)
    CHECK(bvh.nodes[i].bounds == original.nodes[i].bounds);

  TriangleMesh moved = m;
  for (Vec3 &p : moved.positions)
    p.x += 1.f;
  const Bvh shifted = refitted(original, moved);
  for (std::size_t i = 0; i < bvh.nodes.size(); ++i) {
    Aabb expect = original.nodes[i].bounds;
    expect.lo.x += 1.f;
    expect.hi.x += 1.f;
    CHECK(shifted.nodes[i].bounds == expect);
    CHECK(shifted.nodes[i].first == original.nodes[i].first);
    CHECK(shifted.nodes[i].count == original.nodes[i].count);
  }
  CHECK(shifted.prim_index == original.prim_index);
  CHECK(shifted.generation == original.generation);

  TriangleMesh wavy = m;
  oracle::displace(wavy, 0.1f, 5.f, 0.7f);
  const Bvh refit = refitted(original, wavy);
  check_bvh_invariants(refit, wavy);
  const Bvh fresh = build_bvh(wavy);
  std::size_t mismatches = 0, hits = 0;
  for (const Ray &ray : oracle::random_rays(10000, 8, 2.f)) {
    const auto a = intersect(refit, wavy, ray);
    const auto b = intersect(fresh, wavy, ray);
    if (bool(a) != bool(b) || (a && (a->primitive != b->primitive || a->t != b->t)))
      ++mismatches;
    hits += bool(a);
  }
  CHECK(mismatches == 0);
  CHECK(hits > 1000);

  Bvh rebuilt = original;
  rebuild_bvh(rebuilt, wavy);
  CHECK(rebuilt.generation == original.generation + 1);

  TriangleMesh fewer = m;
  fewer.indices.pop_back();
  CHECK_THROWS_AS(refit_bvh(bvh, fewer), StructuralError);
  TriangleMesh rewired = m;
  std::swap(rewired.indices[0][0], rewired.indices[0][1]);
  CHECK_THROWS_AS(refit_bvh(bvh, rewired), StructuralError);
}

TEST_CASE("scene update: empty, locality, errors")
{
  Scene s = deform();
  const Scene before = s;
  const std::uint64_t gen = s.bvhs[0].generation;

  SceneUpdate empty;
  empty.frame_time = s.frame_time + 1;
  apply_scene_update(s, empty);
  CHECK(s.frame_time == before.frame_time + 1);
  CHECK(s.meshes[0].positions == before.meshes[0].positions);
  CHECK(s.camera == before.camera);

  SceneUpdate local;
  local.frame_time = s.frame_time + 1;
  MeshDelta d;
  d.mesh_id = 0;
  VertexRange r;
  r.begin = 0;
  for (int i = 0; i < 10; ++i)
    r.positions.push_back(before.meshes[0].positions[i] + Vec3{0.f, 0.5f, 0.f});
  d.ranges.push_back(r);
  local.meshes.push_back(d);
  apply_scene_update(s, local);
  for (std::size_t i = 0; i < s.meshes[0].positions.size(); ++i) {
    if (i < 10)
      CHECK(s.meshes[0].positions[i] == r.positions[i]);
    else
      CHECK(s.meshes[0].positions[i] == before.meshes[0].positions[i]);
  }
  CHECK(s.bvhs[0].generation == gen);
  check_bvh_invariants(s.bvhs[0], s.meshes[0]);

  const Scene snapshot = s;
  SceneUpdate stale = empty;
  stale.frame_time = 0;
  CHECK_THROWS_AS(apply_scene_update(s, stale), StructuralError);

  SceneUpdate out_of_range;
  out_of_range.frame_time = s.frame_time + 1;
  MeshDelta far;
  far.mesh_id = 0;
  far.ranges.push_back({std::uint32_t(s.meshes[0].positions.size() - 1), {Vec3{}, Vec3{}}});
  out_of_range.meshes.push_back(far);
  out_of_range.camera = Camera{};
  CHECK_THROWS_AS(apply_scene_update(s, out_of_range), StructuralError);

  SceneUpdate overlap;
  overlap.frame_time = s.frame_time + 1;
  MeshDelta o;
  o.mesh_id = 0;
  o.ranges.push_back({0, {Vec3{}, Vec3{}}});
  o.ranges.push_back({1, {Vec3{}}});
  overlap.meshes.push_back(o);
  CHECK_THROWS_AS(apply_scene_update(s, overlap), StructuralError);

  SceneUpdate unknown;
  unknown.frame_time = s.frame_time + 1;
  unknown.meshes.push_back({7, {}});
  CHECK_THROWS_AS(apply_scene_update(s, unknown), StructuralError);

  CHECK(s.frame_time == snapshot.frame_time);
  CHECK(s.meshes[0].positions == snapshot.meshes[0].positions);
  CHECK(s.camera == snapshot.camera);
}

TEST_CASE("scene update: 30 animation frames equal the frame-30 scene")
{
  Scene s = deform();
  REQUIRE(s.animation);
  const std::uint64_t gen = s.bvhs[0].generation;
  const std::size_t vertices = s.meshes[0].positions.size();
  std::size_t transferred = 0;
  for (std::uint64_t f = 1; f <= 30; ++f) {
    const SceneUpdate u = make_animation_update(s, f);
    transferred += u.vertex_count();
    apply_scene_update(s, u);
  }
  CHECK(s.frame_time == 30);
  CHECK(s.bvhs[0].generation == gen);
  CHECK(transferred > 0);
  CHECK(transferred < 30 * vertices);

  // Direct construction from the frame-30 geometry.
  Scene direct = deform();
  direct.meshes[0].positions = direct.animation->positions_at(30);
  direct.frame_time = 30;
  direct.build_acceleration();
  CHECK(s.meshes[0].positions == direct.meshes[0].positions);
  CHECK(scene_state_hash(s) == scene_state_hash(direct));

  std::size_t mismatches = 0;
  for (const Ray &ray : oracle::random_rays(5000, 30, 3.f)) {
    const auto a = intersect(s.bvhs[0], s.meshes[0], ray);
    const auto b = intersect(direct.bvhs[0], direct.meshes[0], ray);
    if (bool(a) != bool(b) || (a && (a->primitive != b->primitive || a->t != b->t)))
      ++mismatches;
  }
  CHECK(mismatches == 0);
  RenderRequest r = full_request({16, 9}, 2);
  CHECK(render_region(s, s.camera, r) == render_region(direct, direct.camera, r));
}

TEST_CASE("diff_vertices only lists changed runs")
{
  std::vector<Vec3> a(10), b(10);
  b[2].y = 1.f;
  b[3].y = 1.f;
  b[7].x = 2.f;
  const auto ranges = diff_vertices(a, b);
  REQUIRE(ranges.size() == 2);
  CHECK(ranges[0].begin == 2);
  CHECK(ranges[0].positions.size() == 2);
  CHECK(ranges[1].begin == 7);
  CHECK(ranges[1].positions.size() == 1);
  CHECK(diff_vertices(a, a).empty());
}

TEST_CASE("bundled scenes load with documented counts")
{
  const Scene g = gloss();
  CHECK(g.meshes.size() == 1);
  CHECK(g.meshes[0].triangle_count() == 2);
  CHECK(g.spheres.size() == 4);
  CHECK(g.lights.size() == 1);
  const Scene d = deform();
  CHECK(d.meshes[0].triangle_count() == 32768);
  CHECK(d.meshes[0].positions.size() == 16641);
  CHECK(d.spheres.size() == 1);
  CHECK_THROWS_AS(scene_path(CPT_SCENE_DIR, "../gloss"), StructuralError);
  CHECK_THROWS_AS(scene_path(CPT_SCENE_DIR, "missing"), StructuralError);
  CHECK_THROWS_AS(parse_scene(
      R"({"materials": [], "spheres": [{"center": [0, 0, 0], "radius": 1, "material": "x"}]})"), StructuralError);
}

TEST_CASE("camera validation")
{
  CHECK_THROWS_AS(validate(Camera{{0.f, 5.f, 0.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 45.f}),
      StructuralError);
  CHECK_THROWS_AS(validate(Camera{{0.f, 0.f, 5.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 180.f}),
      StructuralError);
  CHECK_NOTHROW(validate(Camera{}));
}
