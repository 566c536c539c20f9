#pragma once

#include <cstdint>
#include <functional>

namespace stopdiff {

/// Runs fn(i) for i in [0, n) on `workers` threads, handing out contiguous
/// chunks through an atomic cursor. fn must only write to slots owned by
/// index i; with that contract results are identical for any worker count.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for_index(std::int64_t n, int workers,
                        const std::function<void(std::int64_t)>& fn);

}  // namespace stopdiff
