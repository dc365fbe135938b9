/* origin: authored. Combines the OpenMP reduction with the NEON loop: the
 * 4-wide chunk loop is split across threads in blocks and the per-thread
 * partial sums meet in the reduction. */
#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#include <stdint.h>

#define BLOCK 64

double kernel_entry(const float *a, const float *b, int64_t size) {
  double result = 0.0;
  int64_t blocks = size / BLOCK;
#pragma omp parallel for reduction(+:result)
  for (int64_t blk = 0; blk < blocks; blk++) {
    const float *pa = a + blk * BLOCK;
    const float *pb = b + blk * BLOCK;
    float32x4_t result_vec = vdupq_n_f32(0.0f);
    for (int i = 0; i < BLOCK; i += 4) {
      result_vec = vmlaq_f32(result_vec, vld1q_f32(pa + i), vld1q_f32(pb + i));
    }
    float64x2_t lo = vcvt_f64_f32(vget_low_f32(result_vec));
    float64x2_t hi = vcvt_high_f64_f32(result_vec);
    result += vaddvq_f64(vaddq_f64(lo, hi));
  }
  for (int64_t i = blocks * BLOCK; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
#else
typedef int dot_openmp_simd_neon_requires_arm64;
#endif
