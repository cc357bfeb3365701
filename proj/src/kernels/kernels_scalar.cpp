#include "clusterboot/kernels.hpp"

#include "lanes.hpp"

namespace cboot::kernels {
namespace {

void philox_block(PhiloxKey key, std::uint32_t ctr[4]) {
  std::uint32_t k0 = key.k0;
  std::uint32_t k1 = key.k1;
  for (int r = 0; r < kPhiloxRounds; ++r) {
    if (r > 0) {
      k0 += kPhiloxW0;
      k1 += kPhiloxW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr[0] = hi1 ^ ctr[1] ^ k0;
    ctr[1] = lo1;
    ctr[2] = hi0 ^ ctr[3] ^ k1;
    ctr[3] = lo0;
  }
}

void philox_blocks_scalar(PhiloxKey key, std::uint64_t stream, std::uint64_t first_block,
                          std::uint32_t* out, std::size_t nblocks) {
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::uint64_t block = first_block + b;
    std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    philox_block(key, ctr);
    for (int w = 0; w < 4; ++w) {
      out[4 * b + w] = ctr[w];
    }
  }
}

double sum_scalar(const double* x, std::size_t n) {
  LaneState st;
  for (std::size_t i = 0; i < n; ++i) {
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], x[i]);
  }
  return fold_lanes(st);
}

double sum_sq_dev_scalar(const double* x, std::size_t n, double center) {
  LaneState st;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], d * d);
  }
  return fold_lanes(st);
}

double dot_scalar(const double* w, const double* x, std::size_t n) {
  LaneState st;
  for (std::size_t i = 0; i < n; ++i) {
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], w[i] * x[i]);
  }
  return fold_lanes(st);
}

double weighted_sq_dev_scalar(const double* w, const double* x, std::size_t n, double center) {
  LaneState st;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], w[i] * (d * d));
  }
  return fold_lanes(st);
}

void gather_scalar(const double* src, const std::uint32_t* idx, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = src[idx[i]];
  }
}

} // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      Isa::scalar,         "scalar",   philox_blocks_scalar, sum_scalar, sum_sq_dev_scalar, dot_scalar,
      weighted_sq_dev_scalar, gather_scalar,
  };
  return table;
}

} // namespace cboot::kernels
