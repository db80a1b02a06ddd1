// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpt/render/scene.hpp"

namespace cpt {

struct VertexRange
{
  std::uint32_t begin = 0;
  std::vector<Vec3> positions; // replaces [begin, begin + positions.size())

  friend bool operator==(const VertexRange &, const VertexRange &) = default;
};

struct MeshDelta
{
  std::uint32_t mesh_id = 0;
  std::vector<VertexRange> ranges; // sorted, disjoint

  friend bool operator==(const MeshDelta &, const MeshDelta &) = default;
};

struct SceneUpdate
{
  std::uint64_t frame_time = 0;
  std::vector<MeshDelta> meshes;
  std::optional<Camera> camera;

  std::size_t vertex_count() const;
  friend bool operator==(const SceneUpdate &, const SceneUpdate &) = default;
};

// Validates the whole update first, then applies it: replaces the listed
// vertex ranges, refits (never rebuilds) each touched mesh BVH, replaces the
// camera if present, and advances frame_time. Throws StructuralError on an
// out-of-range, unsorted or overlapping range or unknown mesh, and on a
// frame_time older than the scene's. The scene is untouched on error.
void apply_scene_update(Scene &scene, const SceneUpdate &update);

// Coalesces the vertices that differ (bitwise) between `current` and `next`
// into sorted, disjoint ranges. Unchanged vertices are never transferred.
std::vector<VertexRange> diff_vertices(std::span<const Vec3> current, std::span<const Vec3> next);

// Update that moves the scene's animated mesh (if any) to `frame_time`.
SceneUpdate make_animation_update(const Scene &scene, std::uint64_t frame_time);

} // namespace cpt
