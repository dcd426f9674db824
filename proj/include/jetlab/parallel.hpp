#pragma once

#include <cstddef>
#include <functional>

namespace jetlab {

/// Worker cap: JETLAB_THREADS when set (minimum 1), else the hardware
/// concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n) across workers.  Work is handed out in fixed
/// chunks by index, so any reduction keyed by i is independent of the number
/// of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jetlab
