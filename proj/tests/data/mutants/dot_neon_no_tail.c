/* The NEON listing as printed: no remainder handling. */
#include <arm_neon.h>
#include <stdint.h>

double kernel_entry(const float *a, const float *b, int64_t size) {
  float32x4_t result_vec = vdupq_n_f32(0.0f);
  for (int64_t i = 0; i + 4 <= size; i += 4) {
    float32x4_t a_vec = vld1q_f32(a + i);
    float32x4_t b_vec = vld1q_f32(b + i);
    result_vec = vmlaq_f32(result_vec, a_vec, b_vec);
  }
  return vaddvq_f32(result_vec);
}
