#pragma once

#include <cstddef>
#include <functional>

namespace geig {

// Worker count: GEIG_THREADS if set (>= 1), else the hardware concurrency.
std::size_t worker_count();

// Splits [0, n) into contiguous chunks, one per worker, and runs body(begin, end)
// on each. Every index is handled by exactly one call, so results that are
// computed per index are independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace geig
