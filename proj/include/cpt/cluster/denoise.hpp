// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cpt/render/radiance_buffer.hpp"

namespace cpt {

struct DenoiseOptions
{
  int iterations = 3;        // a-trous levels; step 1, 2, 4, ...
  float color_sigma = 0.25f; // edge stopping on mean radiance differences
  unsigned threads = 0;
};

// Edge-aware a-trous wavelet filter with a 5x5 B3-spline kernel. Each level
// computes c + sum(w * (p - c)) / sum(w) on the radiance sums, so a constant
// image is reproduced bit for bit. spp and frame_id are preserved.
RadianceBuffer denoise(const RadianceBuffer &input, const DenoiseOptions &options = {});

} // namespace cpt
