// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace cpt {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value)
{
  return mix64(seed ^ (value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

// Counter-based random stream. Every value is a pure function of
// (seed namespace, pixel, sample index, bounce, dimension); nothing depends on
// which thread or process evaluates it.
class SampleRng
{
 public:
  constexpr SampleRng(std::uint64_t seed_namespace,
      std::uint32_t px,
      std::uint32_t py,
      std::uint32_t sample)
      : key_(hash_combine(
          hash_combine(mix64(seed_namespace ^ 0x5851f42d4c957f2dull),
              (std::uint64_t(py) << 32) | px),
          sample))
  {}

  constexpr std::uint64_t bits(std::uint32_t bounce, std::uint32_t dimension) const
  {
    return mix64(key_ ^ mix64((std::uint64_t(bounce) << 32) | dimension));
  }

  // Uniform float in [0, 1).
  constexpr float uniform(std::uint32_t bounce, std::uint32_t dimension) const
  {
    return float(bits(bounce, dimension) >> 40) * 0x1.0p-24f;
  }

 private:
  std::uint64_t key_;
};

} // namespace cpt
