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

#include "bevnext/common/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bevnext
{

namespace
{
std::atomic<int> g_threads{1};
thread_local bool t_in_worker = false;
}  // namespace

void set_num_threads(int threads) { g_threads.store(std::max(1, threads)); }

int num_threads() { return g_threads.load(); }

namespace detail
{

void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)> & body)
{
  const std::size_t workers =
    std::min<std::size_t>(static_cast<std::size_t>(num_threads()), count);
  if (workers <= 1 || t_in_worker) {
    body(0, count);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) {
      break;
    }
    pool.emplace_back([&, lo, hi] {
      t_in_worker = true;
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    });
  }
  for (auto & t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace detail
}  // namespace bevnext
