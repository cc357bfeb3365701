#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"

using namespace cboot;
using namespace cboot::kernels;

namespace {

struct Kat {
  std::uint64_t block;
  std::uint64_t stream;
  PhiloxKey key;
  std::array<std::uint32_t, 4> expected;
};

// Published Philox4x32-10 known-answer vectors, counter words (c0, c1, c2, c3)
// mapped to block = c1:c0 and stream = c3:c2.
const Kat kKats[] = {
    {0, 0, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
    {0xffffffffffffffffULL, 0xffffffffffffffffULL, {0xffffffff, 0xffffffff},
     {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
    {0x85a308d3243f6a88ULL, 0x0370734413198a2eULL, {0xa4093822, 0x299f31d0},
     {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
};

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> t{&scalar_table()};
  if (avx2_table() != nullptr) {
    t.push_back(avx2_table());
  }
  return t;
}

std::vector<double> random_values(std::size_t n, std::uint32_t seed, double scale) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) {
    v = scale * u(gen) * std::exp(8.0 * u(gen));
  }
  return x;
}

std::uint64_t bits(double x) {
  std::uint64_t b = 0;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

} // namespace

TEST_CASE("Philox known-answer vectors", "[kernels]") {
  for (const KernelTable* t : tables()) {
    INFO(t->name);
    for (const auto& kat : kKats) {
      std::array<std::uint32_t, 4> out{};
      t->philox_blocks(kat.key, kat.stream, kat.block, out.data(), 1);
      CHECK(out == kat.expected);
    }
  }
}

TEST_CASE("SIMD Philox matches the scalar reference for every block count", "[kernels]") {
  const KernelTable* avx = avx2_table();
  if (avx == nullptr) {
    SKIP("AVX2 not available");
  }
  std::mt19937_64 gen(11);
  for (std::size_t n = 0; n <= 41; ++n) {
    const PhiloxKey key{static_cast<std::uint32_t>(gen()), static_cast<std::uint32_t>(gen())};
    const std::uint64_t stream = gen();
    // start near a 32-bit carry so the block counter crosses words
    const std::uint64_t first = 0xfffffffcULL + (gen() % 8);
    std::vector<std::uint32_t> a(4 * n + 1, 7);
    std::vector<std::uint32_t> b(4 * n + 1, 7);
    scalar_table().philox_blocks(key, stream, first, a.data(), n);
    avx->philox_blocks(key, stream, first, b.data(), n);
    CHECK(a == b);
    CHECK(b.back() == 7u);
  }
}

TEST_CASE("SIMD reductions are bit-identical to the scalar reference", "[kernels]") {
  const KernelTable* avx = avx2_table();
  if (avx == nullptr) {
    SKIP("AVX2 not available");
  }
  const KernelTable& sc = scalar_table();
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto x = random_values(n, static_cast<std::uint32_t>(n), 3.0);
    const auto w = random_values(n, static_cast<std::uint32_t>(n + 1000), 1.0);
    const double c = n > 0 ? x[n / 2] : 0.5;
    INFO("n = " << n);
    CHECK(bits(sc.sum(x.data(), n)) == bits(avx->sum(x.data(), n)));
    CHECK(bits(sc.sum_sq_dev(x.data(), n, c)) == bits(avx->sum_sq_dev(x.data(), n, c)));
    CHECK(bits(sc.dot(w.data(), x.data(), n)) == bits(avx->dot(w.data(), x.data(), n)));
    CHECK(bits(sc.weighted_sq_dev(w.data(), x.data(), n, c)) == bits(avx->weighted_sq_dev(w.data(), x.data(), n, c)));
  }
}

TEST_CASE("SIMD gather matches the scalar reference", "[kernels]") {
  const KernelTable* avx = avx2_table();
  if (avx == nullptr) {
    SKIP("AVX2 not available");
  }
  const auto src = random_values(50, 3, 1.0);
  std::mt19937 gen(5);
  for (std::size_t n = 0; n <= 37; ++n) {
    std::vector<std::uint32_t> idx(n);
    for (auto& i : idx) {
      i = gen() % src.size();
    }
    std::vector<double> a(n + 1, -1.0);
    std::vector<double> b(n + 1, -1.0);
    scalar_table().gather(src.data(), idx.data(), n, a.data());
    avx->gather(src.data(), idx.data(), n, b.data());
    CHECK(a == b);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a[i] == src[idx[i]]);
    }
  }
}

TEST_CASE("compensated sums recover what naive summation loses", "[kernels]") {
  for (const KernelTable* t : tables()) {
    INFO(t->name);
    const std::vector<double> x{1e16, 1.0, -1e16, 1.0, 1e-3};
    CHECK(t->sum(x.data(), x.size()) == 2.001);

    // 10^6 copies of 0.1: the exactly rounded sum of the stored doubles
    const std::vector<double> tenth(1000000, 0.1);
    const long double exact = 1000000.0L * static_cast<long double>(0.1);
    CHECK(t->sum(tenth.data(), tenth.size()) == static_cast<double>(exact));
  }
}

TEST_CASE("reductions agree with long double references", "[kernels]") {
  for (const KernelTable* t : tables()) {
    INFO(t->name);
    for (std::size_t n : {1u, 2u, 5u, 16u, 101u, 1000u}) {
      const auto x = random_values(n, static_cast<std::uint32_t>(7 * n), 2.0);
      const auto w = random_values(n, static_cast<std::uint32_t>(9 * n), 1.0);
      long double s = 0;
      long double ssd = 0;
      long double dot = 0;
      long double wsd = 0;
      const double c = 0.25;
      for (std::size_t i = 0; i < n; ++i) {
        s += x[i];
        const double d = x[i] - c;
        ssd += static_cast<long double>(d * d);
        dot += static_cast<long double>(w[i] * x[i]);
        wsd += static_cast<long double>(w[i] * (d * d));
      }
      auto rel = [](double got, long double want) {
        return std::abs(static_cast<long double>(got) - want) / std::max(std::abs(want), 1e-300L);
      };
      CHECK(rel(t->sum(x.data(), n), s) < 1e-15);
      CHECK(rel(t->sum_sq_dev(x.data(), n, c), ssd) < 1e-15);
      CHECK(rel(t->dot(w.data(), x.data(), n), dot) < 1e-15);
      CHECK(rel(t->weighted_sq_dev(w.data(), x.data(), n, c), wsd) < 1e-15);
    }
  }
}

TEST_CASE("kernel selection", "[kernels]") {
  const Isa before = active().isa;
  select(Isa::scalar);
  CHECK(active().isa == Isa::scalar);
  CHECK(to_string(Isa::scalar) == "scalar");
  CHECK(to_string(Isa::avx2) == "avx2");
  if (avx2_table() != nullptr) {
    select(Isa::avx2);
    CHECK(active().isa == Isa::avx2);
  } else {
    CHECK_THROWS_AS(select(Isa::avx2), Error);
  }
  select(before);
}
