// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "cpt/common/math.hpp"

namespace cpt {

struct Extent
{
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t pixel_count() const { return std::size_t(width) * height; }
  friend bool operator==(const Extent &, const Extent &) = default;
};

struct PixelRect
{
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t pixel_count() const { return std::size_t(width) * height; }
  friend bool operator==(const PixelRect &, const PixelRect &) = default;
};

// Per-pixel radiance SUMS over `spp` samples (not means), so buffers from
// different participants merge by addition. mean = rgb / spp.
struct RadianceBuffer
{
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t spp = 0;
  std::uint64_t frame_id = 0;
  std::vector<float> rgb; // width * height * 3, row-major

  RadianceBuffer() = default;
  RadianceBuffer(std::uint32_t w, std::uint32_t h, std::uint32_t samples, std::uint64_t frame = 0)
      : width(w), height(h), spp(samples), frame_id(frame), rgb(std::size_t(w) * h * 3, 0.f)
  {}

  Extent extent() const { return {width, height}; }
  std::size_t index(std::uint32_t x, std::uint32_t y) const
  {
    return (std::size_t(y) * width + x) * 3;
  }
  Vec3 sum(std::uint32_t x, std::uint32_t y) const
  {
    const std::size_t i = index(x, y);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  Vec3 mean(std::uint32_t x, std::uint32_t y) const { return sum(x, y) / float(spp); }
  void set(std::uint32_t x, std::uint32_t y, const Vec3 &v)
  {
    const std::size_t i = index(x, y);
    rgb[i] = v.x;
    rgb[i + 1] = v.y;
    rgb[i + 2] = v.z;
  }
  std::size_t byte_size() const { return rgb.size() * sizeof(float); }
  bool all_finite() const;

  friend bool operator==(const RadianceBuffer &, const RadianceBuffer &) = default;
};

} // namespace cpt
