// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include "cpt/render/camera.hpp"
#include "cpt/render/radiance_buffer.hpp"
#include "cpt/render/rng.hpp"
#include "cpt/render/scene.hpp"

namespace cpt {

inline constexpr std::uint32_t kDefaultMaxDepth = 10;

struct RenderRequest
{
  Extent dims;                   // image-plane grid the transform applies to
  std::optional<PixelRect> rect; // subset of `dims` to render; all when empty
  PixelTransform transform;
  std::uint32_t spp = 1;
  std::uint32_t first_sample = 0; // global index of the first sample
  std::uint64_t seed_namespace = 0;
  std::uint32_t max_depth = kDefaultMaxDepth;
  unsigned threads = 0; // 0 selects the hardware concurrency
  std::uint64_t frame_id = 0;

  PixelRect region() const { return rect.value_or(PixelRect{0, 0, dims.width, dims.height}); }
};

struct RenderCounters
{
  std::atomic<std::uint64_t> paths{0};
  std::atomic<std::uint64_t> nonfinite_samples{0};
};

struct SurfaceHit
{
  float t = 0.f;
  Vec3 point;
  Vec3 normal; // unit geometric normal, outward (winding / sphere / light side)
  enum class Kind : std::uint8_t
  {
    mesh,
    sphere,
    light
  } kind = Kind::mesh;
  std::uint32_t object = 0;    // mesh, sphere or light index
  std::uint32_t primitive = 0; // triangle index for meshes
  std::uint32_t material = 0;  // unused for lights
};

// Nearest hit over meshes, spheres and lights.
std::optional<SurfaceHit> intersect_scene(const Scene &scene, const Ray &ray);
bool occluded(const Scene &scene, const Ray &ray);

// Radiance along one camera path: unidirectional path tracing with
// next-event estimation toward the quad lights, combined with BSDF sampling
// by the balance heuristic. max_depth bounds the number of path segments,
// light connections included; depth 1 sees only directly visible emission.
Vec3 trace_path(const Scene &scene,
    Ray ray,
    const SampleRng &rng,
    std::uint32_t max_depth,
    RenderCounters *counters = nullptr);

// Sum of `spp` sample radiances for one pixel of the request grid. Samples
// use global indices first_sample .. first_sample + spp - 1 and are keyed by
// (seed_namespace, px, py, sample), so the result is independent of how
// pixels are partitioned or scheduled. Non-finite samples count as zero.
Vec3 render_pixel(const Scene &scene,
    const Camera &camera,
    const RenderRequest &request,
    std::uint32_t px,
    std::uint32_t py,
    RenderCounters *counters = nullptr);

// Renders request.region() into a buffer of that region's size. Bitwise
// identical for identical inputs regardless of request.threads.
RadianceBuffer render_region(const Scene &scene,
    const Camera &camera,
    const RenderRequest &request,
    RenderCounters *counters = nullptr);

} // namespace cpt
