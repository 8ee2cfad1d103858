#pragma once

#include <cstddef>
#include <exception>

namespace trajcurate {

/// Runs body(i) for every i in [0, n). threads <= 1 takes the plain serial
/// loop; otherwise an OpenMP loop with `threads` workers. If any iteration
/// throws, the exception from the lowest index is rethrown, which matches
/// what the serial loop would have reported.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  std::size_t first_index = n;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(trajcurate_parallel_for)
      {
        if (static_cast<std::size_t>(i) < first_index) {
          first_index = static_cast<std::size_t>(i);
          first = std::current_exception();
        }
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace trajcurate
