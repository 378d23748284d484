// Copyright 2026 The qfilter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qfilter {

/// Serial reference loops or OpenMP worksharing. Results do not depend on
/// the choice: every index writes its own slot and reductions run serially
/// in index order afterwards.
enum class Execution { kSerial, kOpenMP };

/// Sets the OpenMP team size; values below 1 keep the runtime default.
void set_thread_count(int threads);
int thread_count();

/// out[i] = fn(i) for i in [0, n). The first exception thrown by any index is
/// rethrown after the loop.
template <typename T, typename Fn>
std::vector<T> map_paths(std::size_t n, Fn&& fn, Execution exec = Execution::kOpenMP) {
  std::vector<T> out(n);
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr error = nullptr;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(qfilter_map_paths_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace qfilter
