// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/denoise.hpp"

#include <cmath>

#include "cpt/common/parallel.hpp"

namespace cpt {

RadianceBuffer denoise(const RadianceBuffer &input, const DenoiseOptions &options)
{
  constexpr float kernel[5] = {1.f / 16, 1.f / 4, 3.f / 8, 1.f / 4, 1.f / 16};
  if (input.width == 0 || input.height == 0 || input.spp == 0)
    return input;

  const unsigned threads = options.threads ? options.threads : default_thread_count();
  const float inv_spp = 1.f / float(input.spp);
  const float inv_sigma2 = 1.f / (options.color_sigma * options.color_sigma);
  const int w = int(input.width), h = int(input.height);

  RadianceBuffer src = input;
  RadianceBuffer dst = input;
  for (int level = 0; level < options.iterations; ++level) {
    const int step = 1 << level;
    parallel_for(std::size_t(h), threads, [&](std::size_t row) {
      const int y = int(row);
      for (int x = 0; x < w; ++x) {
        const Vec3 c = src.sum(std::uint32_t(x), std::uint32_t(y));
        Vec3 acc{0.f};
        float wsum = 0.f;
        for (int j = 0; j < 5; ++j) {
          const int qy = y + (j - 2) * step;
          if (qy < 0 || qy >= h)
            continue;
          for (int i = 0; i < 5; ++i) {
            const int qx = x + (i - 2) * step;
            if (qx < 0 || qx >= w)
              continue;
            const Vec3 d = src.sum(std::uint32_t(qx), std::uint32_t(qy)) - c;
            const Vec3 dm = d * inv_spp;
            const float wt = kernel[i] * kernel[j] * std::exp(-dot(dm, dm) * inv_sigma2);
            acc += d * wt;
            wsum += wt;
          }
        }
        dst.set(std::uint32_t(x), std::uint32_t(y), c + acc / wsum);
      }
    });
    std::swap(src, dst);
  }
  return src;
}

} // namespace cpt
