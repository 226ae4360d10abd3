#ifndef TNT_PARALLEL_HPP
#define TNT_PARALLEL_HPP

// Index-parallel loop used by the sweep, basis-search and Husimi kernels.
// The serial path is the reference implementation: every index is computed
// by the same code in both modes and results are written by index, so the
// two paths are bit-identical.

#include <omp.h>

#include <cstddef>

namespace tnt {

enum class Execution { serial, parallel };

template <typename Body>
void for_each_index(std::ptrdiff_t count, Execution exec, Body&& body) {
  if (exec == Execution::serial || count < 2) {
    for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
}

}  // namespace tnt

#endif  // TNT_PARALLEL_HPP
