#pragma once

#include <cstddef>
#include <exception>
#include <limits>

#include "entroflow/execution.hpp"

namespace entroflow {

// Runs fn(i) for i in [0, n). The parallel branch splits the range statically across OpenMP
// threads; if several iterations throw, the exception of the lowest index is rethrown so that
// both branches report the same failure.
template <class Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::size_t err_index = std::numeric_limits<std::size_t>::max();
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(entroflow_kernel_error)
      {
        if (static_cast<std::size_t>(i) < err_index) {
          err_index = static_cast<std::size_t>(i);
          err = std::current_exception();
        }
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace entroflow
