// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cpt/common/error.hpp"
#include "cpt/render/radiance_buffer.hpp"
#include "cpt/render/tone_map.hpp"

namespace cpt {

class CodecError : public Error
{
 public:
  using Error::Error;
};

std::vector<std::uint8_t> encode_png(const Image8 &image);
Image8 decode_png(std::span<const std::uint8_t> bytes);

// quality in [1, 100].
std::vector<std::uint8_t> encode_jpeg(const Image8 &image, int quality = 90);
Image8 decode_jpeg(std::span<const std::uint8_t> bytes);

// Debug dump of a radiance buffer: the float sums (little-endian, row-major
// RGB) followed by a u32 spp. Dimensions travel outside the dump.
std::vector<std::uint8_t> encode_radiance_dump(const RadianceBuffer &buffer);
RadianceBuffer decode_radiance_dump(
    std::span<const std::uint8_t> bytes, std::uint32_t width, std::uint32_t height);

// Portable float map of the per-pixel means (spp 1 on read).
void write_pfm(const std::filesystem::path &path, const RadianceBuffer &buffer);
RadianceBuffer read_pfm(const std::filesystem::path &path);

// Root-mean-square difference of the per-pixel means over all channels.
// Throws StructuralError on a dimension mismatch.
double rmse(const RadianceBuffer &image, const RadianceBuffer &reference);

} // namespace cpt
