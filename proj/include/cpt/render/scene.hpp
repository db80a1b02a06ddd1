// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpt/common/math.hpp"
#include "cpt/render/bvh.hpp"
#include "cpt/render/mesh.hpp"

namespace cpt {

enum class MaterialKind : std::uint8_t
{
  diffuse,
  metal,
  dielectric,
  emissive
};

// Only the fields relevant to `kind` are read: roughness for metal, ior for
// dielectric, emission for emissive. Albedo tints diffuse, metal and
// dielectric.
struct Material
{
  MaterialKind kind = MaterialKind::diffuse;
  Vec3 albedo{0.8f};
  float roughness = 0.f;
  float ior = 1.5f;
  Vec3 emission{0.f};
};

struct Sphere
{
  Vec3 center;
  float radius = 1.f;
  std::uint32_t material = 0;
};

// One-sided parallelogram emitter; emits toward normalize(cross(edge_u, edge_v)).
struct QuadLight
{
  Vec3 corner;
  Vec3 edge_u;
  Vec3 edge_v;
  Vec3 emission;

  Vec3 normal() const { return normalize(cross(edge_u, edge_v)); }
  float area() const { return length(cross(edge_u, edge_v)); }
};

struct Environment
{
  enum class Kind : std::uint8_t
  {
    constant,
    gradient
  };
  Kind kind = Kind::constant;
  Vec3 top{0.f};    // constant radiance, or radiance toward +y for gradient
  Vec3 bottom{0.f}; // radiance toward -y (gradient only)

  Vec3 radiance(const Vec3 &dir) const
  {
    if (kind == Kind::constant)
      return top;
    const float t = std::clamp(0.5f * (dir.y + 1.f), 0.f, 1.f);
    return bottom * (1.f - t) + top * t;
  }
};

struct Camera
{
  Vec3 position{0.f, 0.f, 5.f};
  Vec3 look_at{0.f};
  Vec3 up{0.f, 1.f, 0.f};
  float vertical_fov = 45.f; // degrees

  friend bool operator==(const Camera &, const Camera &) = default;
};

// Throws StructuralError if the pose is degenerate or the fov is out of range.
void validate(const Camera &camera);

// Procedural ripple used by animated scenes: vertices of `mesh` within
// `radius` of `center` (measured in the xz plane) are displaced along +y by
// amplitude * falloff(r) * sin(2*pi*(r / wavelength - frame / period_frames)).
// Vertices outside the radius never move.
struct RippleAnimation
{
  std::uint32_t mesh = 0;
  Vec3 center;
  float radius = 1.f;
  float amplitude = 0.1f;
  float wavelength = 0.5f;
  float period_frames = 30.f;
  std::vector<Vec3> rest_positions;

  std::vector<Vec3> positions_at(std::uint64_t frame_time) const;
};

struct Scene
{
  std::string name;
  std::vector<Material> materials;
  std::vector<TriangleMesh> meshes;
  std::vector<Sphere> spheres;
  std::vector<QuadLight> lights;
  Environment environment;
  Camera camera;
  std::uint64_t frame_time = 0;
  std::optional<RippleAnimation> animation;

  // One BVH per mesh; index-aligned with `meshes`.
  std::vector<Bvh> bvhs;

  // Throws StructuralError when an invariant is violated.
  void validate() const;

  // Rebuilds every mesh BVH from scratch.
  void build_acceleration();
};

// Hash of the mutable scene state (frame time, camera, vertex positions).
// Equal hashes on master and worker replicas mean identical geometry.
std::uint64_t scene_state_hash(const Scene &scene);

} // namespace cpt
