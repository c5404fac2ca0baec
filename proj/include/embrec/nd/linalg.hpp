#pragma once

#include <cstddef>

namespace embrec::nd {

enum class Trans { no, yes };

// C[m x n] = op(A) * op(B) (+ C), all operands contiguous row-major. op(A) is
// m x k; A itself is k x m when transposed. Routed through the active SIMD
// kernel set.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const float* a, const float* b, float* c, bool accumulate);

// Out-of-place transpose of a rows x cols matrix.
void transpose(const float* src, std::size_t rows, std::size_t cols, float* dst);

}  // namespace embrec::nd
