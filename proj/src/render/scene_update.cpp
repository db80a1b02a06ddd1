// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/scene_update.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "cpt/common/error.hpp"

namespace cpt {

std::size_t SceneUpdate::vertex_count() const
{
  std::size_t n = 0;
  for (const MeshDelta &m : meshes)
    for (const VertexRange &r : m.ranges)
      n += r.positions.size();
  return n;
}

namespace {

void check_update(const Scene &scene, const SceneUpdate &update)
{
  if (update.frame_time < scene.frame_time)
    throw StructuralError("stale scene update: frame_time " + std::to_string(update.frame_time)
        + " is older than scene frame_time " + std::to_string(scene.frame_time));

  std::vector<std::uint32_t> seen;
  for (const MeshDelta &delta : update.meshes) {
    if (delta.mesh_id >= scene.meshes.size())
      throw StructuralError("scene update references unknown mesh " + std::to_string(delta.mesh_id));
    if (std::find(seen.begin(), seen.end(), delta.mesh_id) != seen.end())
      throw StructuralError("scene update lists mesh " + std::to_string(delta.mesh_id) + " twice");
    seen.push_back(delta.mesh_id);

    const std::uint64_t vcount = scene.meshes[delta.mesh_id].positions.size();
    std::uint64_t previous_end = 0;
    for (const VertexRange &r : delta.ranges) {
      const std::uint64_t end = std::uint64_t(r.begin) + r.positions.size();
      if (r.positions.empty())
        throw StructuralError("empty vertex range");
      if (end > vcount)
        throw StructuralError("vertex range [" + std::to_string(r.begin) + ", "
            + std::to_string(end) + ") exceeds mesh of " + std::to_string(vcount) + " vertices");
      if (r.begin < previous_end)
        throw StructuralError("vertex ranges must be sorted and disjoint");
      previous_end = end;
    }
  }
  if (update.camera)
    validate(*update.camera);
}

} // namespace

void apply_scene_update(Scene &scene, const SceneUpdate &update)
{
  check_update(scene, update);

  for (const MeshDelta &delta : update.meshes) {
    TriangleMesh &mesh = scene.meshes[delta.mesh_id];
    for (const VertexRange &r : delta.ranges)
      std::copy(r.positions.begin(), r.positions.end(), mesh.positions.begin() + r.begin);
    if (delta.mesh_id < scene.bvhs.size() && !delta.ranges.empty())
      refit_bvh(scene.bvhs[delta.mesh_id], mesh);
  }
  if (update.camera)
    scene.camera = *update.camera;
  scene.frame_time = update.frame_time;
}

std::vector<VertexRange> diff_vertices(std::span<const Vec3> current, std::span<const Vec3> next)
{
  if (current.size() != next.size())
    throw StructuralError("vertex diff requires equal vertex counts");

  std::vector<VertexRange> ranges;
  std::size_t i = 0;
  const std::size_t n = current.size();
  auto differs = [&](std::size_t k) {
    return std::memcmp(&current[k], &next[k], sizeof(Vec3)) != 0;
  };
  while (i < n) {
    if (!differs(i)) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < n && differs(end))
      ++end;
    ranges.push_back(VertexRange{static_cast<std::uint32_t>(i),
        std::vector<Vec3>(next.begin() + i, next.begin() + end)});
    i = end;
  }
  return ranges;
}

SceneUpdate make_animation_update(const Scene &scene, std::uint64_t frame_time)
{
  SceneUpdate update;
  update.frame_time = frame_time;
  if (!scene.animation)
    return update;
  const RippleAnimation &anim = *scene.animation;
  const std::vector<Vec3> next = anim.positions_at(frame_time);
  auto ranges = diff_vertices(scene.meshes[anim.mesh].positions, next);
  if (!ranges.empty())
    update.meshes.push_back(MeshDelta{anim.mesh, std::move(ranges)});
  return update;
}

} // namespace cpt
