// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/camera.hpp"

#include "cpt/common/error.hpp"

namespace cpt {

void PixelTransform::validate() const
{
  if (!(scale_x > 0.f && scale_x <= 1.f && scale_y > 0.f && scale_y <= 1.f))
    throw StructuralError("pixel transform scale must lie in (0, 1]");
  if (!(translate_x >= 0.f && translate_x < 1.f && translate_y >= 0.f && translate_y < 1.f))
    throw StructuralError("pixel transform translate must lie in [0, 1)");
  if (translate_x + scale_x > 1.f || translate_y + scale_y > 1.f)
    throw StructuralError("pixel transform sub-cell leaves the pixel footprint");
}

ScreenSample screen_sample(
    Extent dims, std::uint32_t px, std::uint32_t py, float u, float v, const PixelTransform &xf)
{
  const float x = (float(px) + xf.translate_x + xf.scale_x * u) / float(dims.width);
  const float y = (float(py) + xf.translate_y + xf.scale_y * v) / float(dims.height);
  return {x, y};
}

Ray sample_camera_ray(const Camera &camera,
    Extent dims,
    std::uint32_t px,
    std::uint32_t py,
    float u,
    float v,
    const PixelTransform &xf)
{
  const ScreenSample s = screen_sample(dims, px, py, u, v, xf);
  const float aspect = (float(dims.width) / xf.scale_x) / (float(dims.height) / xf.scale_y);
  const float tan_half = std::tan(camera.vertical_fov * (kPi / 360.f));

  const Vec3 forward = normalize(camera.look_at - camera.position);
  const Vec3 right = normalize(cross(forward, camera.up));
  const Vec3 up = cross(right, forward);

  const float cx = (2.f * s.x - 1.f) * tan_half * aspect;
  const float cy = (1.f - 2.f * s.y) * tan_half;
  Ray ray;
  ray.origin = camera.position;
  ray.dir = normalize(forward + right * cx + up * cy);
  return ray;
}

} // namespace cpt
