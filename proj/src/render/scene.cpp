// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/scene.hpp"

#include <cstring>
#include <string>

#include "cpt/common/error.hpp"
#include "cpt/render/radiance_buffer.hpp"

namespace cpt {

void validate(const Camera &camera)
{
  if (!(camera.vertical_fov > 0.f && camera.vertical_fov < 180.f))
    throw StructuralError("camera fov must lie strictly inside (0, 180) degrees");
  const Vec3 forward = camera.look_at - camera.position;
  if (!(dot(forward, forward) > 0.f))
    throw StructuralError("camera look_at coincides with its position");
  const Vec3 side = cross(forward, camera.up);
  if (!(dot(side, side) > 0.f))
    throw StructuralError("camera up vector is parallel to the view direction");
}

std::vector<Vec3> RippleAnimation::positions_at(std::uint64_t frame_time) const
{
  std::vector<Vec3> out = rest_positions;
  const float phase = float(double(frame_time) / double(period_frames));
  for (Vec3 &p : out) {
    const float dx = p.x - center.x;
    const float dz = p.z - center.z;
    const float r = std::sqrt(dx * dx + dz * dz);
    if (!(r < radius))
      continue;
    const float falloff = (1.f - r / radius) * (1.f - r / radius);
    p.y += amplitude * falloff * std::sin(2.f * kPi * (r / wavelength - phase));
  }
  return out;
}

void Scene::validate() const
{
  const auto material_count = materials.size();
  auto check_material = [&](std::uint32_t id, const char *what) {
    if (id >= material_count)
      throw StructuralError(std::string(what) + " references unknown material "
          + std::to_string(id));
  };

  for (const Material &m : materials) {
    if (m.kind == MaterialKind::emissive
        && (m.emission.x < 0.f || m.emission.y < 0.f || m.emission.z < 0.f))
      throw StructuralError("negative material emission");
    if (m.albedo.x > 1.f || m.albedo.y > 1.f || m.albedo.z > 1.f || m.albedo.x < 0.f
        || m.albedo.y < 0.f || m.albedo.z < 0.f)
      throw StructuralError("material albedo must lie in [0, 1]");
    if (m.kind == MaterialKind::dielectric && !(m.ior > 1.f))
      throw StructuralError("dielectric ior must exceed 1");
    if (m.kind == MaterialKind::metal && !(m.roughness >= 0.f && m.roughness <= 1.f))
      throw StructuralError("metal roughness must lie in [0, 1]");
  }

  for (const TriangleMesh &mesh : meshes) {
    check_material(mesh.material, "mesh");
    const auto vcount = mesh.positions.size();
    for (const auto &tri : mesh.indices)
      for (std::uint32_t v : tri)
        if (v >= vcount)
          throw StructuralError("mesh index out of range");
  }
  for (const Sphere &s : spheres) {
    check_material(s.material, "sphere");
    if (!(s.radius > 0.f))
      throw StructuralError("sphere radius must be positive");
  }
  for (const QuadLight &l : lights) {
    if (l.emission.x < 0.f || l.emission.y < 0.f || l.emission.z < 0.f)
      throw StructuralError("negative light emission");
    if (!(l.area() > 0.f))
      throw StructuralError("quad light has zero area");
  }
  if (animation) {
    if (animation->mesh >= meshes.size())
      throw StructuralError("animation references unknown mesh");
    if (animation->rest_positions.size() != meshes[animation->mesh].positions.size())
      throw StructuralError("animation rest pose does not match its mesh");
  }
  cpt::validate(camera);
}

void Scene::build_acceleration()
{
  bvhs.clear();
  bvhs.reserve(meshes.size());
  for (const TriangleMesh &mesh : meshes)
    bvhs.push_back(build_bvh(mesh));
}

namespace {

struct Fnv1a
{
  std::uint64_t state = 0xcbf29ce484222325ull;

  void bytes(const void *data, std::size_t n)
  {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ull;
    }
  }
  template <typename T>
  void value(const T &v)
  {
    bytes(&v, sizeof(T));
  }
};

} // namespace

std::uint64_t scene_state_hash(const Scene &scene)
{
  Fnv1a h;
  h.value(scene.frame_time);
  for (const Vec3 *v : {&scene.camera.position, &scene.camera.look_at, &scene.camera.up})
    h.value(*v);
  h.value(scene.camera.vertical_fov);
  for (const TriangleMesh &mesh : scene.meshes) {
    h.value(mesh.positions.size());
    h.bytes(mesh.positions.data(), mesh.positions.size() * sizeof(Vec3));
  }
  return h.state;
}

bool RadianceBuffer::all_finite() const
{
  for (float f : rgb)
    if (!std::isfinite(f))
      return false;
  return true;
}

} // namespace cpt
