#pragma once

#include <cstddef>
#include <functional>

namespace covertseq {

// Worker count: COVERTSEQ_THREADS if set (clamped to >= 1), otherwise the
// number of available cores.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous index blocks, one
// per worker. Each index is processed exactly once, so writing results into
// slot i of a preallocated buffer gives output independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace covertseq
