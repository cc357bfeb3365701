#pragma once

// Counter-based random streams.
//
// Each stream is Philox4x32-10 keyed by a 64-bit key, with the upper 64 bits
// of the counter fixed to a stream id and the lower 64 bits counting blocks.
// Streams with different (key, stream id) never overlap, so a replicate,
// population or bootstrap draw can be regenerated in isolation and in any
// order. Stream layout used across the library:
//
//   population k of a dataset seeded s     key(s, population),     stream k
//   bootstrap replicate b of a run seeded s key(s, bootstrap),     stream b
//   Monte Carlo replicate r of grid point g dataset seed derive_seed(master, {g, r})
//
// The 32-bit output sequence is block 0 words 0..3, block 1 words 0..3, ...

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "clusterboot/kernels.hpp"

namespace cboot {

enum class StreamDomain : std::uint64_t {
  population = 0x706f70756c6174ULL,
  bootstrap = 0x626f6f747374ULL,
  experiment = 0x6578706572ULL,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Hash a seed and a path of indices into a new 64-bit seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) {
    h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  }
  return h;
}

class RngStream {
public:
  RngStream(std::uint64_t seed, StreamDomain domain, std::uint64_t stream) noexcept
      : RngStream(key_for(seed, domain), stream) {}

  RngStream(kernels::PhiloxKey key, std::uint64_t stream) noexcept : key_(key), stream_(stream) {}

  static kernels::PhiloxKey key_for(std::uint64_t seed, StreamDomain domain) noexcept {
    const std::uint64_t k = derive_seed(seed, {static_cast<std::uint64_t>(domain)});
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint32_t next_u32() {
    if (pos_ == buffer_.size()) {
      refill();
    }
    return buffer_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n >= 1. Lemire's multiply-shift with rejection.
  std::uint32_t uniform_below(std::uint32_t n) {
    std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * n;
    std::uint32_t low = static_cast<std::uint32_t>(m);
    if (low < n) {
      const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
      while (low < threshold) {
        m = static_cast<std::uint64_t>(next_u32()) * n;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Standard normal (Marsaglia polar method; the second variate is cached).
  double normal();

  /// Exp(1).
  double exponential() { return -std::log1p(-uniform01()); }

  /// Gamma(shape, 1), shape > 0 (Marsaglia-Tsang).
  double gamma(double shape);

  std::uint64_t stream_id() const noexcept { return stream_; }

private:
  void refill() {
    kernels::philox_blocks(key_, stream_, next_block_, buffer_);
    next_block_ += buffer_.size() / 4;
    pos_ = 0;
  }

  kernels::PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t next_block_ = 0;
  std::array<std::uint32_t, 64> buffer_{};
  std::size_t pos_ = 64;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

} // namespace cboot
