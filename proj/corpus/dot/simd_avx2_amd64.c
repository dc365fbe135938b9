/* origin: authored. AVX2 counterpart of the NEON listing: 8-wide float
 * multiply-adds into partial lanes, drained into doubles every block, with a
 * scalar tail for sizes that are not a multiple of 8. */
#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>
#include <stdint.h>

#define BLOCK 256

static double drain(__m256 v) {
  __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
  __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
  __m256d s = _mm256_add_pd(lo, hi);
  __m128d h = _mm_add_pd(_mm256_castpd256_pd128(s), _mm256_extractf128_pd(s, 1));
  return _mm_cvtsd_f64(_mm_add_sd(h, _mm_unpackhi_pd(h, h)));
}

double kernel_entry(const float *a, const float *b, int64_t size) {
  double result = 0.0;
  int64_t i = 0;
  for (; i + BLOCK <= size; i += BLOCK) {
    __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
    __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
    for (int j = 0; j < BLOCK; j += 32) {
      acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(_mm256_loadu_ps(a + i + j), _mm256_loadu_ps(b + i + j)));
      acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(_mm256_loadu_ps(a + i + j + 8), _mm256_loadu_ps(b + i + j + 8)));
      acc2 = _mm256_add_ps(acc2, _mm256_mul_ps(_mm256_loadu_ps(a + i + j + 16), _mm256_loadu_ps(b + i + j + 16)));
      acc3 = _mm256_add_ps(acc3, _mm256_mul_ps(_mm256_loadu_ps(a + i + j + 24), _mm256_loadu_ps(b + i + j + 24)));
    }
    result += drain(_mm256_add_ps(_mm256_add_ps(acc0, acc1), _mm256_add_ps(acc2, acc3)));
  }
  __m256 acc = _mm256_setzero_ps();
  for (; i + 8 <= size; i += 8) {
    acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  result += drain(acc);
  for (; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
#else
typedef int dot_simd_avx2_requires_amd64;
#endif
