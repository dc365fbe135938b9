/* dot/SimdAvx2 with the scalar tail loop dropped, as in the original NEON
 * listing: elements past the last multiple of 8 are ignored. */
#include <immintrin.h>
#include <stdint.h>

double kernel_entry(const float *a, const float *b, int64_t size) {
  __m256 acc = _mm256_setzero_ps();
  for (int64_t i = 0; i + 8 <= size; i += 8) {
    acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  float lanes[8];
  _mm256_storeu_ps(lanes, acc);
  double result = 0.0;
  for (int j = 0; j < 8; j++) result += lanes[j];
  return result;
}
