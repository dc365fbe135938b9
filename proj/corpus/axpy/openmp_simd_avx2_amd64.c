/* origin: authored. Threads split the 8-lane chunks; the tail stays serial. */
#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>
#include <stdint.h>

void kernel_entry(float a, const float *x, float *y, int64_t n) {
  __m256 av = _mm256_set1_ps(a);
  int64_t nv = n - n % 8;
#pragma omp parallel for
  for (int64_t i = 0; i < nv; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_mul_ps(av, _mm256_loadu_ps(x + i)), yv));
  }
  for (int64_t i = nv; i < n; i++) {
    y[i] = a * x[i] + y[i];
  }
}
#else
typedef int axpy_openmp_simd_avx2_requires_amd64;
#endif
