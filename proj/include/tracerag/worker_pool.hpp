#pragma once

#include <cstddef>
#include <functional>

namespace tracerag {

// Runs fn(0..count-1) across up to `workers` threads (sequential when
// workers <= 1). Blocks until all tasks finish; the first exception thrown by
// any task is rethrown on the calling thread after the pool drains.
void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn);

}  // namespace tracerag
