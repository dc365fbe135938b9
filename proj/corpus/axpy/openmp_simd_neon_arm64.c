/* origin: authored. Threads split the 4-lane chunks; the tail stays serial. */
#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#include <stdint.h>

void kernel_entry(float a, const float *x, float *y, int64_t n) {
  int64_t nv = n - n % 4;
#pragma omp parallel for
  for (int64_t i = 0; i < nv; i += 4) {
    float32x4_t y_vec = vld1q_f32(y + i);
    vst1q_f32(y + i, vmlaq_n_f32(y_vec, vld1q_f32(x + i), a));
  }
  for (int64_t i = nv; i < n; i++) {
    y[i] = a * x[i] + y[i];
  }
}
#else
typedef int axpy_openmp_simd_neon_requires_arm64;
#endif
