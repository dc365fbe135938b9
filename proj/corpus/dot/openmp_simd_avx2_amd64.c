/* origin: authored. OpenMP over 256-element blocks, each reduced with AVX2
 * as in simd_avx2_amd64.c; threads combine through the reduction clause. */
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
  int64_t blocks = size / BLOCK;
#pragma omp parallel for reduction(+:result)
  for (int64_t blk = 0; blk < blocks; blk++) {
    const float *pa = a + blk * BLOCK;
    const float *pb = b + blk * BLOCK;
    __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
    __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
    for (int j = 0; j < BLOCK; j += 32) {
      acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(_mm256_loadu_ps(pa + j), _mm256_loadu_ps(pb + j)));
      acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(_mm256_loadu_ps(pa + j + 8), _mm256_loadu_ps(pb + j + 8)));
      acc2 = _mm256_add_ps(acc2, _mm256_mul_ps(_mm256_loadu_ps(pa + j + 16), _mm256_loadu_ps(pb + j + 16)));
      acc3 = _mm256_add_ps(acc3, _mm256_mul_ps(_mm256_loadu_ps(pa + j + 24), _mm256_loadu_ps(pb + j + 24)));
    }
    result += drain(_mm256_add_ps(_mm256_add_ps(acc0, acc1), _mm256_add_ps(acc2, acc3)));
  }
  for (int64_t i = blocks * BLOCK; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
#else
typedef int dot_openmp_simd_avx2_requires_amd64;
#endif
