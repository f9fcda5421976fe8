#pragma once

#include <cstddef>
#include <functional>

namespace cooccur {

// Worker cap for data-parallel sections (graph edge evaluation, k-means
// restarts, batch inference). Each work item writes only its own output slot
// and reductions happen after a deterministic merge, so results are identical
// for any thread count.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs fn(i) for i in [0, n). Splits into contiguous chunks across workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cooccur
