/* origin: paper listing (scalar dot product), wrapped in the kernel_entry ABI.
 *
 *   double result = 0.0;
 *   for(int i = 0; i < size; i++) {
 *       result += a[i] * b[i];
 *   }
 */
#include <stdint.h>

double kernel_entry(const float *a, const float *b, int64_t size) {
  double result = 0.0;
  for (int64_t i = 0; i < size; i++) {
    result += a[i] * b[i];
  }
  return result;
}
