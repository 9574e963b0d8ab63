#include "prefnet/nn/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace prefnet::nn::kernels {

#if defined(PREFNET_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif
#if defined(PREFNET_HAVE_NEON)
namespace neon {
extern const KernelTable kTable;
}
#endif

const KernelTable* avx2_kernels() {
#if defined(PREFNET_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2::kTable : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(PREFNET_HAVE_NEON)
  return &neon::kTable;  // Advanced SIMD is mandatory on aarch64
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* forced = std::getenv("PREFNET_SIMD");
  const std::string_view want = forced ? forced : "";
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2" && avx2_kernels()) return *avx2_kernels();
  if (want == "neon" && neon_kernels()) return *neon_kernels();
  if (const auto* t = avx2_kernels()) return *t;
  if (const auto* t = neon_kernels()) return *t;
  return scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{&select()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

const KernelTable& set_active(const KernelTable& table) { return *slot().exchange(&table); }

}  // namespace prefnet::nn::kernels
