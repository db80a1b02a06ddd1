// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "cpt/common/math.hpp"
#include "cpt/render/radiance_buffer.hpp"
#include "cpt/render/scene.hpp"

namespace cpt {

// Remaps where a pixel's samples land: a sample with jitter (u, v) is placed
// at (px + translate.x + scale.x * u, py + translate.y + scale.y * v).
struct PixelTransform
{
  float scale_x = 1.f;
  float scale_y = 1.f;
  float translate_x = 0.f;
  float translate_y = 0.f;

  static constexpr PixelTransform identity() { return {}; }
  bool is_identity() const
  {
    return scale_x == 1.f && scale_y == 1.f && translate_x == 0.f && translate_y == 0.f;
  }
  // Throws StructuralError unless scale in (0,1], translate in [0,1) and
  // translate + scale <= 1 on both axes.
  void validate() const;

  friend bool operator==(const PixelTransform &, const PixelTransform &) = default;
};

// Normalized screen position in [0,1)^2 of a sample, before projection.
struct ScreenSample
{
  float x;
  float y;
};

ScreenSample screen_sample(
    Extent dims, std::uint32_t px, std::uint32_t py, float u, float v, const PixelTransform &xf);

// Pinhole camera ray through the sample. The image plane covers `dims`
// cells, each spanning 1/scale final-image pixels, so the aspect ratio is
// (dims.width / scale_x) : (dims.height / scale_y). With the identity
// transform this is ordinary per-pixel sampling. Rows grow downward.
Ray sample_camera_ray(const Camera &camera,
    Extent dims,
    std::uint32_t px,
    std::uint32_t py,
    float u,
    float v,
    const PixelTransform &xf);

} // namespace cpt
