// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpt/common/math.hpp"
#include "cpt/render/mesh.hpp"

namespace cpt {

// Interior nodes have count == 0 and their two children at `first` and
// `first + 1`. Leaves reference prim_index[first, first + count).
// Children always sit at higher indices than their parent.
struct BvhNode
{
  Aabb bounds;
  std::uint32_t first = 0;
  std::uint32_t count = 0;

  bool is_leaf() const { return count != 0; }
};

struct Bvh
{
  std::vector<BvhNode> nodes;
  std::vector<std::uint32_t> prim_index;
  std::uint64_t generation = 0;
  std::uint32_t triangle_count = 0;
  // Zero-area triangles seen at build time. They stay in the tree (so a
  // later deformation that gives them area is still handled by refit) but
  // can never be hit.
  std::uint32_t degenerate_count = 0;
  std::uint64_t topology_hash = 0; // of the index buffer the tree was built over
};

// FNV-1a over the triangle index buffer.
std::uint64_t topology_hash(const TriangleMesh &mesh);

struct MeshHit
{
  float t;
  std::uint32_t primitive;
  float u;
  float v;
  Vec3 normal; // unit geometric normal, winding-oriented
};

// Binned-SAH build. Throws StructuralError for an empty mesh or out-of-range
// indices. Deterministic for identical input.
Bvh build_bvh(const TriangleMesh &mesh);

// Rebuilds in place and bumps the generation counter.
void rebuild_bvh(Bvh &bvh, const TriangleMesh &mesh);

// Recomputes every node's bounds bottom-up for deformed vertex positions.
// Topology, primitive order and generation are left untouched. Throws
// StructuralError when the triangle count differs from the build.
void refit_bvh(Bvh &bvh, const TriangleMesh &mesh);
Bvh refitted(Bvh bvh, const TriangleMesh &mesh);

// Nearest hit in (ray.tmin, ray.tmax). Ties in t resolve to the lowest
// primitive id so results match a linear scan exactly.
std::optional<MeshHit> intersect(const Bvh &bvh, const TriangleMesh &mesh, const Ray &ray);

// True if anything is hit in (ray.tmin, ray.tmax).
bool occluded(const Bvh &bvh, const TriangleMesh &mesh, const Ray &ray);

} // namespace cpt
