/* origin: authored. Scalar matmul, rows of C shared out across threads. */
#include <stdint.h>

void kernel_entry(const float *A, const float *B, float *C, int64_t m, int64_t n, int64_t k) {
#pragma omp parallel for
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
