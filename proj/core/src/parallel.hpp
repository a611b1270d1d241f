// SPDX-License-Identifier: Apache-2.0
// Internal: static-partition parallel loop; results are order-independent
// because each index writes only its own slot.
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lingogap::detail {

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn &&fn) {
  const std::size_t w =
      std::max<std::size_t>(1, std::min<std::size_t>(n, workers > 0 ? workers : 1));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += w) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto &th : threads) th.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace lingogap::detail
