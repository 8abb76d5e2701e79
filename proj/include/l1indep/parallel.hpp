#pragma once

#include <cstddef>
#include <functional>

namespace l1indep {

// Runs fn(i) for every i in [0, count) across up to `threads` workers
// (0 means hardware concurrency). Work is handed out dynamically, so callers
// must make fn(i) depend only on i, never on scheduling; results are written
// into caller-owned slots indexed by i. The first exception thrown by any
// worker is rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

// Resolved worker count for a requested setting (0 -> hardware concurrency,
// never less than 1).
unsigned resolve_threads(unsigned requested);

} // namespace l1indep
