#pragma once

#include <cstddef>
#include <functional>

namespace spm {

// Process-wide worker count used by parallel_for. Defaults to 1.
void set_thread_count(unsigned threads);
unsigned thread_count();

// Calls body(i) for every i in [0, count). Work is split into contiguous
// blocks; body must only write state owned by index i, which keeps results
// independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Number of fixed reduction chunks. Reductions that sum floating point
// partials use this many chunks regardless of thread count.
inline constexpr std::size_t kReductionChunks = 64;

}  // namespace spm
