/* origin: paper listing (NEON loop), extended with a scalar tail.
 *
 *   for(int i = 0; i < size; i += 4) {
 *       a_vec = vld1q_f32(a + i);
 *       b_vec = vld1q_f32(b + i);
 *       result_vec = vmlaq_f32(result_vec, a_vec, b_vec);
 *   }
 *
 * The listing reads past the end when size is not a multiple of 4. Here the
 * vector loop stops at the last full group and the rest is done one element
 * at a time. result_vec is drained into a double every block so the four
 * float lanes never carry a long sum.
 */
#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#include <stdint.h>

#define BLOCK 64

double kernel_entry(const float *a, const float *b, int64_t size) {
  double result = 0.0;
  int64_t i = 0;
  while (i + 4 <= size) {
    int64_t end = i + BLOCK;
    if (end > size) end = size;
    float32x4_t result_vec = vdupq_n_f32(0.0f);
    for (; i + 4 <= end; i += 4) {
      float32x4_t a_vec = vld1q_f32(a + i);
      float32x4_t b_vec = vld1q_f32(b + i);
      result_vec = vmlaq_f32(result_vec, a_vec, b_vec);
    }
    float64x2_t lo = vcvt_f64_f32(vget_low_f32(result_vec));
    float64x2_t hi = vcvt_high_f64_f32(result_vec);
    result += vaddvq_f64(vaddq_f64(lo, hi));
  }
  for (; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
#else
typedef int dot_simd_neon_requires_arm64;
#endif
