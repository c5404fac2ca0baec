#include "embrec/simd/kernels.hpp"

namespace embrec::simd {
namespace {

void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const float* a,
                 std::size_t lda, const float* b, std::size_t ldb, float* c,
                 std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0f;
    }
    const float* arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      const float* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

float dot_scalar(const float* x, const float* y, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void dot_rows_scalar(const float* rows, std::size_t count, std::size_t stride,
                     const float* query, std::size_t dim, float* out) {
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = dot_scalar(rows + i * stride, query, dim);
  }
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{Backend::scalar, "scalar", &gemm_scalar,
                             &dot_scalar,     &axpy_scalar, &dot_rows_scalar};
  return set;
}

}  // namespace embrec::simd
