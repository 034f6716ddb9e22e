#include "tmla/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tmla::par {

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double sum_chunked(const double* x, std::size_t n) {
  return sum_indexed(n, [x](std::size_t i) { return x[i]; });
}

}  // namespace tmla::par
