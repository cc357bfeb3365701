#include <atomic>
#include <cstdlib>
#include <string>

#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"

namespace cboot::kernels {

const KernelTable* avx2_table_impl() noexcept;

namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const char* env = std::getenv("CBOOT_SIMD");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") {
    return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) {
    return t;
  }
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

} // namespace

const KernelTable* avx2_table() noexcept {
  static const bool usable = cpu_has_avx2();
  return usable ? avx2_table_impl() : nullptr;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (isa == Isa::scalar) {
    current().store(&scalar_table(), std::memory_order_release);
    return;
  }
  const KernelTable* t = avx2_table();
  if (t == nullptr) {
    throw Error(Errc::invalid_argument, "AVX2 kernels are not available on this machine");
  }
  current().store(t, std::memory_order_release);
}

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar: return "scalar";
  case Isa::avx2: return "avx2";
  }
  return "unknown";
}

} // namespace cboot::kernels
