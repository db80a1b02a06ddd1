// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cpt/common/math.hpp"

namespace cpt {

struct TriangleMesh
{
  std::vector<Vec3> positions;
  std::vector<std::array<std::uint32_t, 3>> indices;
  std::uint32_t material = 0;

  std::size_t triangle_count() const { return indices.size(); }
  Aabb triangle_bounds(std::uint32_t tri) const;
};

struct TriangleHit
{
  float t;
  float u; // barycentric weight of vertex 1
  float v; // barycentric weight of vertex 2
};

// Moller-Trumbore. Returns a hit only for t in (ray.tmin, ray.tmax).
// Degenerate (zero-area) triangles never report a hit.
std::optional<TriangleHit> intersect_triangle(
    const Ray &ray, const Vec3 &p0, const Vec3 &p1, const Vec3 &p2);

} // namespace cpt
