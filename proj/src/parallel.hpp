#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace infopos::detail {

// Runs body(i) for i in [0, n) on an OpenMP team. Exceptions cannot cross the
// region boundary, so each is parked per index and the lowest-index one is
// rethrown afterwards; the outcome does not depend on scheduling.
// workers <= 0 uses the OpenMP default team size.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#ifdef _OPENMP
  const int team = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team) if (team > 1 && !omp_in_parallel())
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace infopos::detail
