/* origin: authored. Scalar axpy with the loop split across threads. */
#include <stdint.h>

void kernel_entry(float a, const float *x, float *y, int64_t n) {
#pragma omp parallel for
  for (int64_t i = 0; i < n; i++) {
    y[i] = a * x[i] + y[i];
  }
}
