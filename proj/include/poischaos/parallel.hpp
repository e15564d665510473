#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace poischaos {

// Runs body(i) for i in [0, n). Iterations must write disjoint outputs; any
// accumulation inside one iteration stays in that iteration, so results are
// identical for every thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    body(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_worker_count(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace poischaos
