#pragma once

// Block-parallel loops. Work is cut into blocks whose boundaries do not
// depend on the worker count; per-block results are combined in block order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adscft/errors.hpp"

namespace adscft {

/// requested > 0 wins; otherwise ADSCFT_WORKERS; otherwise the hardware count.
inline int resolve_workers(int requested = 0) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("ADSCFT_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw DomainError(std::string("ADSCFT_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Calls body(block) for block = 0..n_blocks-1 on up to `workers` threads.
/// The first exception thrown by any block is rethrown.
template <class Body>
void parallel_blocks(std::size_t n_blocks, int workers, Body&& body) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n_blocks);
  if (w <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
      body(b);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) {
        return;
      }
      try {
        body(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        next = n_blocks;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < w; ++i) {
    threads.emplace_back(run);
  }
  for (auto& t : threads) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace adscft
