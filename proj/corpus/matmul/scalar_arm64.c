/* origin: authored. Row-major C = A*B with A m x k, B k x n. */
#include <stdint.h>

void kernel_entry(const float *A, const float *B, float *C, int64_t m, int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; i++) {
    for (int64_t j = 0; j < n; j++) {
      double acc = 0.0;
      for (int64_t p = 0; p < k; p++) {
        acc += A[i * k + p] * B[p * n + j];
      }
      C[i * n + j] = (float)acc;
    }
  }
}
