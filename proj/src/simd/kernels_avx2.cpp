// Compiled with -mavx2 -mfma. Keep this translation unit free of standard
// library templates so no AVX-encoded instantiation can leak into the
// scalar code paths through ODR merging.

#include "embrec/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace embrec::simd {
namespace {

constexpr std::size_t kRowBlock = 6;
constexpr std::size_t kColBlock = 16;
constexpr std::size_t kDepthBlock = 256;

inline __m256i lane_mask(std::size_t valid) {
  alignas(32) static const int kTable[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                             0,  0,  0,  0,  0,  0,  0,  0};
  if (valid >= 8) valid = 8;
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kTable + 8 - valid));
}

template <int R, bool Full>
inline void micro_kernel(std::size_t depth, const float* a, std::size_t lda,
                         const float* b, std::size_t ldb, float* c,
                         std::size_t ldc, bool accumulate, __m256i m0,
                         __m256i m1) {
  __m256 lo[R];
  __m256 hi[R];
  for (int r = 0; r < R; ++r) {
    lo[r] = _mm256_setzero_ps();
    hi[r] = _mm256_setzero_ps();
  }
  for (std::size_t p = 0; p < depth; ++p) {
    const float* brow = b + p * ldb;
    __m256 b0, b1;
    if constexpr (Full) {
      b0 = _mm256_loadu_ps(brow);
      b1 = _mm256_loadu_ps(brow + 8);
    } else {
      b0 = _mm256_maskload_ps(brow, m0);
      b1 = _mm256_maskload_ps(brow + 8, m1);
    }
    for (int r = 0; r < R; ++r) {
      const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
      lo[r] = _mm256_fmadd_ps(av, b0, lo[r]);
      hi[r] = _mm256_fmadd_ps(av, b1, hi[r]);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* crow = c + r * ldc;
    if constexpr (Full) {
      if (accumulate) {
        lo[r] = _mm256_add_ps(lo[r], _mm256_loadu_ps(crow));
        hi[r] = _mm256_add_ps(hi[r], _mm256_loadu_ps(crow + 8));
      }
      _mm256_storeu_ps(crow, lo[r]);
      _mm256_storeu_ps(crow + 8, hi[r]);
    } else {
      if (accumulate) {
        lo[r] = _mm256_add_ps(lo[r], _mm256_maskload_ps(crow, m0));
        hi[r] = _mm256_add_ps(hi[r], _mm256_maskload_ps(crow + 8, m1));
      }
      _mm256_maskstore_ps(crow, m0, lo[r]);
      _mm256_maskstore_ps(crow + 8, m1, hi[r]);
    }
  }
}

template <bool Full>
void dispatch_rows(std::size_t rows, std::size_t depth, const float* a,
                   std::size_t lda, const float* b, std::size_t ldb, float* c,
                   std::size_t ldc, bool accumulate, __m256i m0, __m256i m1) {
  switch (rows) {
    case 6: micro_kernel<6, Full>(depth, a, lda, b, ldb, c, ldc, accumulate, m0, m1); break;
    case 5: micro_kernel<5, Full>(depth, a, lda, b, ldb, c, ldc, accumulate, m0, m1); break;
    case 4: micro_kernel<4, Full>(depth, a, lda, b, ldb, c, ldc, accumulate, m0, m1); break;
    case 3: micro_kernel<3, Full>(depth, a, lda, b, ldb, c, ldc, accumulate, m0, m1); break;
    case 2: micro_kernel<2, Full>(depth, a, lda, b, ldb, c, ldc, accumulate, m0, m1); break;
    default: micro_kernel<1, Full>(depth, a, lda, b, ldb, c, ldc, accumulate, m0, m1); break;
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a,
               std::size_t lda, const float* b, std::size_t ldb, float* c,
               std::size_t ldc, bool accumulate) {
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = 0.0f;
    }
    return;
  }
  const __m256i full = _mm256_set1_epi32(-1);
  for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
    const std::size_t depth = (k - p0 < kDepthBlock) ? k - p0 : kDepthBlock;
    const bool acc = accumulate || p0 > 0;
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
      const std::size_t width = (n - j0 < kColBlock) ? n - j0 : kColBlock;
      for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
        const std::size_t rows = (m - i0 < kRowBlock) ? m - i0 : kRowBlock;
        const float* ablk = a + i0 * lda + p0;
        const float* bblk = b + p0 * ldb + j0;
        float* cblk = c + i0 * ldc + j0;
        if (width == kColBlock) {
          dispatch_rows<true>(rows, depth, ablk, lda, bblk, ldb, cblk, ldc, acc, full, full);
        } else {
          const __m256i m0 = lane_mask(width);
          const __m256i m1 = lane_mask(width > 8 ? width - 8 : 0);
          dispatch_rows<false>(rows, depth, ablk, lda, bblk, ldb, cblk, ldc, acc, m0, m1);
        }
      }
    }
  }
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

float dot_avx2(const float* x, const float* y, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  if (i + 8 <= n) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    i += 8;
  }
  if (i < n) {
    const __m256i mask = lane_mask(n - i);
    acc1 = _mm256_fmadd_ps(_mm256_maskload_ps(x + i, mask),
                           _mm256_maskload_ps(y + i, mask), acc1);
  }
  return hsum(_mm256_add_ps(acc0, acc1));
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  }
  if (i < n) {
    const __m256i mask = lane_mask(n - i);
    const __m256 r = _mm256_fmadd_ps(av, _mm256_maskload_ps(x + i, mask),
                                     _mm256_maskload_ps(y + i, mask));
    _mm256_maskstore_ps(y + i, mask, r);
  }
}

void dot_rows_avx2(const float* rows, std::size_t count, std::size_t stride,
                   const float* query, std::size_t dim, float* out) {
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = dot_avx2(rows + i * stride, query, dim);
  }
}

}  // namespace

const KernelSet* avx2_kernels_compiled() {
  static const KernelSet set{Backend::avx2, "avx2", &gemm_avx2,
                             &dot_avx2,     &axpy_avx2, &dot_rows_avx2};
  return &set;
}

}  // namespace embrec::simd

#else

namespace embrec::simd {
const KernelSet* avx2_kernels_compiled() { return nullptr; }
}  // namespace embrec::simd

#endif
