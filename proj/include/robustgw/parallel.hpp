#pragma once

#include <cstddef>
#include <functional>

namespace robustgw {

/// Worker count: ROBUSTGW_THREADS if set, else hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Work is handed out by an atomic counter; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace robustgw
