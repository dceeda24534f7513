// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace compdiff {

/// Philox4x32-10 counter-based generator.
///
/// A generator is identified by (seed, stream). Every draw advances a 64-bit
/// block counter, so two generators with different streams never share
/// output and can be consumed in any order. Sampling rows, dataset
/// examples and training steps each get their own stream via
/// derive_stream(), which is what makes results independent of execution
/// order. Gaussians use Box-Muller on 53-bit uniforms.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream = 0);

  // Raw 10-round bijection, exposed for known-answer tests.
  static Block bijection(Block counter, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n); unbiased (rejection). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block block_{};
  int index_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a parent stream id with a child index (splitmix64 finalizer).
std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t child);

// Named stream roots so unrelated consumers of one seed never collide.
namespace streams {
inline constexpr std::uint64_t kInit = 0x1001;
inline constexpr std::uint64_t kTrainStep = 0x2002;
inline constexpr std::uint64_t kEpoch = 0x3003;
inline constexpr std::uint64_t kSampleRow = 0x4004;
inline constexpr std::uint64_t kLangevinRow = 0x5005;
inline constexpr std::uint64_t kDataExample = 0x6006;
inline constexpr std::uint64_t kSplit = 0x7007;
}  // namespace streams

}  // namespace compdiff
