// Copyright 2026 The bevnext Authors
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
#include <functional>

namespace bevnext
{

/// Sets the worker count used by parallel_for. Values below 1 are clamped to 1.
void set_num_threads(int threads);
int num_threads();

namespace detail
{
void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)> & body);
}  // namespace detail

/// Runs body(i) for every i in [begin, end). Callers must only write state
/// owned by index i, which keeps results independent of the thread count.
/// Nested calls from inside a worker run serially.
template <typename Body>
void parallel_for(std::size_t begin, std::size_t end, Body && body)
{
  if (end <= begin) {
    return;
  }
  detail::parallel_chunks(end - begin, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      body(begin + i);
    }
  });
}

}  // namespace bevnext
