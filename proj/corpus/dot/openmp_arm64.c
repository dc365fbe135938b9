/* origin: paper listing (scalar loop plus the OpenMP reduction pragma).
 *
 *   #pragma omp parallel for reduction(+:result)
 */
#include <stdint.h>

double kernel_entry(const float *a, const float *b, int64_t size) {
  double result = 0.0;
#pragma omp parallel for reduction(+:result)
  for (int64_t i = 0; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
