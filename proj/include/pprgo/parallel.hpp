#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pprgo/error.hpp"

namespace pprgo {

/// Environment variable that overrides any configured worker count.
inline constexpr const char* kWorkersEnv = "PPRGO_WORKERS";

inline std::size_t resolve_workers(std::size_t configured) {
  if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 1)
      throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer, got '" + env + "'");
    return static_cast<std::size_t>(value);
  }
  return std::max<std::size_t>(configured, 1);
}

/// Runs fn(index, worker) for every index in [0, count) on `workers` threads.
/// Indices are handed out in fixed-size chunks from a shared counter; callers
/// write results by index, so output does not depend on the schedule. The
/// first exception thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn, std::size_t chunk = 16) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](std::size_t worker) {
    try {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
        if (begin >= count) break;
        const std::size_t end = std::min(count, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) fn(i, worker);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body, w);
    body(0);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace pprgo
