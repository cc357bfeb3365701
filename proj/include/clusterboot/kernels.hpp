#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// Every kernel is defined by its scalar implementation. SIMD variants must
// return bit-identical results: reductions use four interleaved lanes
// (element i goes to lane i % 4), each lane keeps a Knuth two-sum
// compensation term, and the lanes are folded in a fixed order. The build
// disables FMA contraction so both variants round the same way.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cboot::kernels {

struct PhiloxKey {
  std::uint32_t k0;
  std::uint32_t k1;
};

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // Philox4x32-10 blocks for counters (first_block + j, stream), j < nblocks.
  // Counter words: c0,c1 = 64-bit block index (low word first), c2,c3 = stream.
  // Writes 4 * nblocks words, block-major.
  void (*philox_blocks)(PhiloxKey key, std::uint64_t stream, std::uint64_t first_block,
                        std::uint32_t* out, std::size_t nblocks);

  double (*sum)(const double* x, std::size_t n);
  // sum of (x_i - center)^2
  double (*sum_sq_dev)(const double* x, std::size_t n, double center);
  // sum of w_i * x_i
  double (*dot)(const double* w, const double* x, std::size_t n);
  // sum of w_i * (x_i - center)^2
  double (*weighted_sq_dev)(const double* w, const double* x, std::size_t n, double center);
  // out[i] = src[idx[i]]
  void (*gather)(const double* src, const std::uint32_t* idx, std::size_t n, double* out);
};

const KernelTable& scalar_table() noexcept;

/// AVX2 table, or nullptr when the CPU or the build lacks AVX2.
const KernelTable* avx2_table() noexcept;

/// Kernel table in use. Chosen on first call: the CBOOT_SIMD environment
/// variable ("scalar", "avx2", "auto") overrides CPU detection.
const KernelTable& active() noexcept;

/// Force a variant. Throws cboot::Error if the variant is unavailable.
void select(Isa isa);

std::string_view to_string(Isa isa) noexcept;

inline void philox_blocks(PhiloxKey key, std::uint64_t stream, std::uint64_t first_block,
                          std::span<std::uint32_t> out) {
  active().philox_blocks(key, stream, first_block, out.data(), out.size() / 4);
}

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline double sum_sq_dev(std::span<const double> x, double center) {
  return active().sum_sq_dev(x.data(), x.size(), center);
}

inline double dot(std::span<const double> w, std::span<const double> x) {
  return active().dot(w.data(), x.data(), x.size());
}

inline double weighted_sq_dev(std::span<const double> w, std::span<const double> x, double center) {
  return active().weighted_sq_dev(w.data(), x.data(), x.size(), center);
}

inline void gather(std::span<const double> src, std::span<const std::uint32_t> idx, std::span<double> out) {
  active().gather(src.data(), idx.data(), idx.size(), out.data());
}

} // namespace cboot::kernels
