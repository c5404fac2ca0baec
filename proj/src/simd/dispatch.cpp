#include <atomic>
#include <cstdlib>
#include <string>

#include "embrec/simd/kernels.hpp"

namespace embrec::simd {

const KernelSet* avx2_kernels_compiled();

bool cpu_has_avx2_fma() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelSet* avx2_kernels() {
  static const KernelSet* set = cpu_has_avx2_fma() ? avx2_kernels_compiled() : nullptr;
  return set;
}

namespace {

const KernelSet* initial_choice() {
  const char* env = std::getenv("EMBREC_SIMD");
  const std::string wanted = env ? env : "auto";
  if (wanted == "scalar") return &scalar_kernels();
  if (const KernelSet* fast = avx2_kernels()) return fast;
  return &scalar_kernels();
}

std::atomic<const KernelSet*>& current() {
  static std::atomic<const KernelSet*> choice{initial_choice()};
  return choice;
}

}  // namespace

const KernelSet& active() { return *current().load(std::memory_order_relaxed); }

bool select(Backend backend) {
  if (backend == Backend::scalar) {
    current().store(&scalar_kernels());
    return true;
  }
  const KernelSet* fast = avx2_kernels();
  if (!fast) return false;
  current().store(fast);
  return true;
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace embrec::simd
