/* origin: authored. 4 lanes per step, scalar tail. */
#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#include <stdint.h>

void kernel_entry(float a, const float *x, float *y, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t y_vec = vld1q_f32(y + i);
    vst1q_f32(y + i, vmlaq_n_f32(y_vec, vld1q_f32(x + i), a));
  }
  for (; i < n; i++) {
    y[i] = a * x[i] + y[i];
  }
}
#else
typedef int axpy_simd_neon_requires_arm64;
#endif
