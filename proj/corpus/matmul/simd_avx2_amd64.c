/* origin: authored. i-p-j order: each A element is broadcast against a row
 * of B and accumulated into 8 columns of C at a time. Columns past the last
 * multiple of 8 use the scalar loop. */
#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>
#include <stdint.h>

void kernel_entry(const float *A, const float *B, float *C, int64_t m, int64_t n, int64_t k) {
  int64_t nv = n - n % 8;
  for (int64_t i = 0; i < m; i++) {
    float *c = C + i * n;
    for (int64_t j = 0; j < nv; j += 8) {
      __m256 acc = _mm256_setzero_ps();
      for (int64_t p = 0; p < k; p++) {
        __m256 av = _mm256_set1_ps(A[i * k + p]);
        acc = _mm256_add_ps(acc, _mm256_mul_ps(av, _mm256_loadu_ps(B + p * n + j)));
      }
      _mm256_storeu_ps(c + j, acc);
    }
    for (int64_t j = nv; j < n; j++) {
      double acc = 0.0;
      for (int64_t p = 0; p < k; p++) {
        acc += A[i * k + p] * B[p * n + j];
      }
      c[j] = (float)acc;
    }
  }
}
#else
typedef int matmul_simd_avx2_requires_amd64;
#endif
