#include <stdint.h>

double kernel_entry(const float *a, const float *b, int64_t size) {
  volatile float *p = (volatile float *)0;
  (void)b;
  return a[0] * size + *p;
}
