#pragma once

#include <cstddef>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace uaamg {

inline void set_num_threads(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int num_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs f(i) for i in [0, n). Iterations must write disjoint locations.
/// Short ranges and calls from inside a parallel region run serially.
template <class F>
void parallel_for(std::size_t n, F&& f) {
#if defined(_OPENMP)
  if (n < 512 || omp_in_parallel()) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

/// Sum of f(i) over [0, n) with a fixed blocking, so the result does not
/// depend on the number of threads.
template <class F>
double deterministic_sum(std::size_t n, F&& f) {
  constexpr std::size_t block = 2048;
  const std::size_t n_blocks = (n + block - 1) / block;
  std::vector<double> partial(n_blocks, 0.0);
  parallel_for(n_blocks, [&](std::size_t b) {
    double s = 0.0;
    const std::size_t end = (b + 1) * block < n ? (b + 1) * block : n;
    for (std::size_t i = b * block; i < end; ++i) s += f(i);
    partial[b] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

} // namespace uaamg
