#pragma once

// Shared scalar pieces of the kernels. Everything here has internal linkage:
// this header is compiled both with and without -mavx2, and an inline
// function with external linkage could be merged into the AVX2 copy.

#include <cstddef>
#include <cstdint>

namespace cboot::kernels {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
constexpr int kPhiloxRounds = 10;
constexpr std::size_t kLanes = 4;

struct LaneState {
  double s[kLanes] = {0.0, 0.0, 0.0, 0.0};
  double c[kLanes] = {0.0, 0.0, 0.0, 0.0};
};

// Knuth two-sum: s + e == a + b exactly.
inline void two_sum_into(double& s, double& c, double x) {
  const double t = s + x;
  const double bp = t - s;
  const double ap = t - bp;
  const double e = (s - ap) + (x - bp);
  s = t;
  c = c + e;
}

inline double fold_lanes(const LaneState& st) {
  double s = 0.0;
  double c = 0.0;
  for (std::size_t j = 0; j < kLanes; ++j) {
    two_sum_into(s, c, st.s[j]);
  }
  for (std::size_t j = 0; j < kLanes; ++j) {
    c = c + st.c[j];
  }
  return s + c;
}

} // namespace
} // namespace cboot::kernels
