// Copyright 2026 The sparsnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sparsnn {

inline void set_num_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

inline int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Calls fn(begin, end) on disjoint contiguous blocks covering [0, n).
/// Callers must only write outputs owned by their block so that the result
/// does not depend on the thread count.
template <typename Fn>
void parallel_blocks(std::int64_t n, Fn&& fn) {
#ifdef _OPENMP
  if (n > 64 && omp_get_max_threads() > 1) {
#pragma omp parallel
    {
      const std::int64_t threads = omp_get_num_threads();
      const std::int64_t id = omp_get_thread_num();
      const std::int64_t chunk = (n + threads - 1) / threads;
      const std::int64_t begin = std::min(n, id * chunk);
      const std::int64_t end = std::min(n, begin + chunk);
      if (begin < end) fn(begin, end);
    }
    return;
  }
#endif
  if (n > 0) fn(std::int64_t{0}, n);
}

}  // namespace sparsnn
