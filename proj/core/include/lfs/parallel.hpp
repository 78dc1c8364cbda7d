#pragma once

#include <cstddef>
#include <functional>

namespace lfs {

/// Runs body(i) for i in [0, n) on up to `threads` worker threads (0 means hardware concurrency).
/// Indices are claimed dynamically; callers must write results to per-index slots.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

} // namespace lfs
