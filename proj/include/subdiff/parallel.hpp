#pragma once

#include <cstddef>
#include <functional>

namespace subdiff {

/// Worker count: SUBDIFF_THREADS if set and positive, hardware concurrency otherwise.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker threads. Each index is visited
/// exactly once; callers write results into per-index slots and reduce serially
/// afterwards, so the outcome does not depend on the thread count.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace subdiff
