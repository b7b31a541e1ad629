#pragma once

#include <cstddef>
#include <functional>

namespace kpc {

// Worker count: KPC_THREADS if set, else hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Each index is processed exactly once; callers
// must write only to per-index slots so results are scheduling-independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace kpc
