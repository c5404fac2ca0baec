#include "embrec/nd/linalg.hpp"

#include <algorithm>
#include <vector>

#include "embrec/simd/kernels.hpp"

namespace embrec::nd {

void transpose(const float* src, std::size_t rows, std::size_t cols, float* dst) {
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += kTile) {
    for (std::size_t j0 = 0; j0 < cols; j0 += kTile) {
      const std::size_t i1 = std::min(rows, i0 + kTile);
      const std::size_t j1 = std::min(cols, j0 + kTile);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
    }
  }
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          const float* a, const float* b, float* c, bool accumulate) {
  std::vector<float> a_buf;
  std::vector<float> b_buf;
  if (ta == Trans::yes) {
    a_buf.resize(m * k);
    transpose(a, k, m, a_buf.data());
    a = a_buf.data();
  }
  if (tb == Trans::yes) {
    b_buf.resize(k * n);
    transpose(b, n, k, b_buf.data());
    b = b_buf.data();
  }
  simd::active().gemm(m, n, k, a, k, b, n, c, n, accumulate);
}

}  // namespace embrec::nd
