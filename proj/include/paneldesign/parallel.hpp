#pragma once

#include <cstdint>
#include <functional>

namespace paneldesign {

int default_threads();

// Runs fn(i) for i in [0, n) across up to `threads` workers (0 = all cores).
// Each index must only touch its own output slot; the first exception thrown
// by a worker is rethrown on the calling thread.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace paneldesign
