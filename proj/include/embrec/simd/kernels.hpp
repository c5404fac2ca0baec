#pragma once

// Data-parallel float kernels with a portable scalar reference and an
// AVX2/FMA variant. The variant is picked once at startup from CPUID and
// can be forced with EMBREC_SIMD=scalar|avx2.

#include <cstddef>
#include <string_view>

namespace embrec::simd {

enum class Backend { scalar, avx2 };

struct KernelSet {
  Backend backend;
  const char* name;

  // C[M x N] = A[M x K] * B[K x N] (+ C when accumulate). Row-major with
  // explicit leading dimensions.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const float* a,
               std::size_t lda, const float* b, std::size_t ldb, float* c,
               std::size_t ldc, bool accumulate);

  float (*dot)(const float* x, const float* y, std::size_t n);

  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);

  // out[i] = dot(rows + i * stride, query, dim) for i in [0, count)
  void (*dot_rows)(const float* rows, std::size_t count, std::size_t stride,
                   const float* query, std::size_t dim, float* out);
};

const KernelSet& scalar_kernels();

// Null when the binary was built without AVX2 support or the CPU lacks it.
const KernelSet* avx2_kernels();

// Kernel set used by every numeric routine in the library.
const KernelSet& active();

// Overrides the runtime choice. Returns false if the backend is unavailable.
bool select(Backend backend);

bool cpu_has_avx2_fma();

std::string_view backend_name(Backend backend);

}  // namespace embrec::simd
