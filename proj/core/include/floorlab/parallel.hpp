#pragma once

#include <cstddef>
#include <functional>

namespace floorlab {

/// Worker count from FLOORLAB_WORKERS, else hardware concurrency (>= 1).
std::size_t default_worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work items
/// are claimed dynamically, so callers must write results by index. The
/// first exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace floorlab
