#pragma once

#include <cstddef>
#include <vector>

namespace tmla::par {

// Worker cap for the OpenMP kernels. 0 = runtime default. Thread-count must
// never change numeric results; anything order-sensitive goes through the
// chunked reducers below.
void set_threads(int n);
int threads();

// Sum in fixed-size chunks, chunks combined in index order. The result is
// identical for any thread count.
double sum_chunked(const double* x, std::size_t n);

// Same guarantee for sum of f(i) over [0, n).
template <class F>
double sum_indexed(std::size_t n, F&& f) {
  constexpr std::size_t kChunk = 8192;
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  if (nchunks <= 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f(i);
    return s;
  }
  std::vector<double> partial(nchunks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = lo + kChunk < n ? lo + kChunk : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

template <class F>
void for_n(long long n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < n; ++i) body(i);
}

}  // namespace tmla::par
