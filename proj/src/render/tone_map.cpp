// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/tone_map.hpp"

#include <algorithm>
#include <cmath>

#include "cpt/common/error.hpp"

namespace cpt {

float srgb_encode(float linear)
{
  if (linear <= 0.0031308f)
    return 12.92f * linear;
  return 1.055f * std::pow(linear, 1.f / 2.4f) - 0.055f;
}

std::uint8_t tone_map_channel(float mean)
{
  if (!(mean > 0.f))
    return 0;
  const float reinhard = std::isinf(mean) ? 1.f : mean / (1.f + mean);
  const float q = std::floor(srgb_encode(reinhard) * 255.f + 0.5f);
  return static_cast<std::uint8_t>(std::clamp(q, 0.f, 255.f));
}

Image8 tone_map(const RadianceBuffer &rb)
{
  if (rb.spp == 0)
    throw StructuralError("tone mapping requires spp >= 1");
  Image8 out{rb.width, rb.height, std::vector<std::uint8_t>(rb.rgb.size())};
  const float spp = float(rb.spp);
  for (std::size_t i = 0; i < rb.rgb.size(); ++i)
    out.rgb[i] = tone_map_channel(rb.rgb[i] / spp);
  return out;
}

} // namespace cpt
