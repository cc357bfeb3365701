// Compiled with -mavx2. Keep this translation unit free of standard-library
// templates and external-linkage inline functions (see lanes.hpp).

#include "clusterboot/kernels.hpp"

#include "lanes.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define CBOOT_HAVE_AVX2_TU 1
#endif

namespace cboot::kernels {

#if CBOOT_HAVE_AVX2_TU
namespace {

struct HiLo {
  __m256i hi;
  __m256i lo;
};

inline HiLo mulhilo(__m256i a, __m256i m) {
  const __m256i even = _mm256_mul_epu32(a, m);
  const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), m);
  HiLo r;
  r.lo = _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA);
  r.hi = _mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA);
  return r;
}

// Eight Philox blocks starting at `block`, written block-major into out[0..32).
void philox8(PhiloxKey key, std::uint64_t stream, std::uint64_t block, std::uint32_t* out) {
  alignas(32) std::uint32_t lo_words[8];
  alignas(32) std::uint32_t hi_words[8];
  for (int j = 0; j < 8; ++j) {
    const std::uint64_t b = block + static_cast<std::uint64_t>(j);
    lo_words[j] = static_cast<std::uint32_t>(b);
    hi_words[j] = static_cast<std::uint32_t>(b >> 32);
  }
  __m256i c0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lo_words));
  __m256i c1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(hi_words));
  __m256i c2 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(stream)));
  __m256i c3 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(stream >> 32)));
  const __m256i m0 = _mm256_set1_epi32(static_cast<int>(kPhiloxM0));
  const __m256i m1 = _mm256_set1_epi32(static_cast<int>(kPhiloxM1));

  std::uint32_t k0 = key.k0;
  std::uint32_t k1 = key.k1;
  for (int r = 0; r < kPhiloxRounds; ++r) {
    if (r > 0) {
      k0 += kPhiloxW0;
      k1 += kPhiloxW1;
    }
    const HiLo p0 = mulhilo(c0, m0);
    const HiLo p1 = mulhilo(c2, m1);
    const __m256i vk0 = _mm256_set1_epi32(static_cast<int>(k0));
    const __m256i vk1 = _mm256_set1_epi32(static_cast<int>(k1));
    const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(p1.hi, c1), vk0);
    const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(p0.hi, c3), vk1);
    c0 = n0;
    c1 = p1.lo;
    c2 = n2;
    c3 = p0.lo;
  }

  alignas(32) std::uint32_t w[4][8];
  _mm256_store_si256(reinterpret_cast<__m256i*>(w[0]), c0);
  _mm256_store_si256(reinterpret_cast<__m256i*>(w[1]), c1);
  _mm256_store_si256(reinterpret_cast<__m256i*>(w[2]), c2);
  _mm256_store_si256(reinterpret_cast<__m256i*>(w[3]), c3);
  for (int j = 0; j < 8; ++j) {
    out[4 * j + 0] = w[0][j];
    out[4 * j + 1] = w[1][j];
    out[4 * j + 2] = w[2][j];
    out[4 * j + 3] = w[3][j];
  }
}

void philox_blocks_avx2(PhiloxKey key, std::uint64_t stream, std::uint64_t first_block, std::uint32_t* out,
                        std::size_t nblocks) {
  std::size_t b = 0;
  for (; b + 8 <= nblocks; b += 8) {
    philox8(key, stream, first_block + b, out + 4 * b);
  }
  if (b < nblocks) {
    std::uint32_t tmp[32];
    philox8(key, stream, first_block + b, tmp);
    for (std::size_t i = 0; i < 4 * (nblocks - b); ++i) {
      out[4 * b + i] = tmp[i];
    }
  }
}

inline void vec_two_sum(__m256d& s, __m256d& c, __m256d x) {
  const __m256d t = _mm256_add_pd(s, x);
  const __m256d bp = _mm256_sub_pd(t, s);
  const __m256d ap = _mm256_sub_pd(t, bp);
  const __m256d e = _mm256_add_pd(_mm256_sub_pd(s, ap), _mm256_sub_pd(x, bp));
  s = t;
  c = _mm256_add_pd(c, e);
}

inline void spill(LaneState& st, __m256d s, __m256d c) {
  _mm256_storeu_pd(st.s, s);
  _mm256_storeu_pd(st.c, c);
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vec_two_sum(s, c, _mm256_loadu_pd(x + i));
  }
  LaneState st;
  spill(st, s, c);
  for (; i < n; ++i) {
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], x[i]);
  }
  return fold_lanes(st);
}

double sum_sq_dev_avx2(const double* x, std::size_t n, double center) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  const __m256d vc = _mm256_set1_pd(center);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vc);
    vec_two_sum(s, c, _mm256_mul_pd(d, d));
  }
  LaneState st;
  spill(st, s, c);
  for (; i < n; ++i) {
    const double d = x[i] - center;
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], d * d);
  }
  return fold_lanes(st);
}

double dot_avx2(const double* w, const double* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vec_two_sum(s, c, _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i)));
  }
  LaneState st;
  spill(st, s, c);
  for (; i < n; ++i) {
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], w[i] * x[i]);
  }
  return fold_lanes(st);
}

double weighted_sq_dev_avx2(const double* w, const double* x, std::size_t n, double center) {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  const __m256d vc = _mm256_set1_pd(center);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vc);
    vec_two_sum(s, c, _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(d, d)));
  }
  LaneState st;
  spill(st, s, c);
  for (; i < n; ++i) {
    const double d = x[i] - center;
    two_sum_into(st.s[i % kLanes], st.c[i % kLanes], w[i] * (d * d));
  }
  return fold_lanes(st);
}

void gather_avx2(const double* src, const std::uint32_t* idx, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    _mm256_storeu_pd(out + i, _mm256_i32gather_pd(src, vi, 8));
  }
  for (; i < n; ++i) {
    out[i] = src[idx[i]];
  }
}

} // namespace

const KernelTable* avx2_table_impl() noexcept {
  static const KernelTable table{
      Isa::avx2,           "avx2",   philox_blocks_avx2, sum_avx2, sum_sq_dev_avx2, dot_avx2,
      weighted_sq_dev_avx2, gather_avx2,
  };
  return &table;
}

#else

const KernelTable* avx2_table_impl() noexcept { return nullptr; }

#endif

} // namespace cboot::kernels
