// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "cpt/render/radiance_buffer.hpp"

namespace cpt {

struct Image8
{
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> rgb; // width * height * 3

  friend bool operator==(const Image8 &, const Image8 &) = default;
};

// Standard sRGB transfer function on a linear value in [0, 1].
float srgb_encode(float linear);

// Reinhard m / (1 + m) on the per-pixel mean, then sRGB encode, then
// round-half-up quantization to 8 bits.
std::uint8_t tone_map_channel(float mean);
Image8 tone_map(const RadianceBuffer &rb);

} // namespace cpt
