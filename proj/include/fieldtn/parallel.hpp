#pragma once

#include <cstddef>
#include <functional>

namespace fieldtn {

/// Thread count from FIELDTN_THREADS, else the hardware concurrency (at least 1).
int default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Work is handed out by index; callers write results into per-index slots and
/// reduce afterwards, so results never depend on scheduling. The first
/// exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace fieldtn
