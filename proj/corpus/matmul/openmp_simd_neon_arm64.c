/* origin: authored. The SIMD kernel with rows of C split across threads. */
#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#include <stdint.h>

void kernel_entry(const float *A, const float *B, float *C, int64_t m, int64_t n, int64_t k) {
  int64_t nv = n - n % 4;
#pragma omp parallel for
  for (int64_t i = 0; i < m; i++) {
    float *c = C + i * n;
    for (int64_t j = 0; j < nv; j += 4) {
      float32x4_t acc = vdupq_n_f32(0.0f);
      for (int64_t p = 0; p < k; p++) {
        acc = vmlaq_n_f32(acc, vld1q_f32(B + p * n + j), A[i * k + p]);
      }
      vst1q_f32(c + j, acc);
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
typedef int matmul_openmp_simd_neon_requires_arm64;
#endif
