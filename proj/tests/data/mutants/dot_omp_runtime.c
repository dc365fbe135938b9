#include <omp.h>
#include <stdint.h>

double kernel_entry(const float *a, const float *b, int64_t size) {
  double result = 0.0;
  int threads = omp_get_max_threads();
#pragma omp parallel for reduction(+:result) num_threads(threads)
  for (int64_t i = 0; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
