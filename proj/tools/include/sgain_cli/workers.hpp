#pragma once

#include <cstddef>
#include <functional>

namespace sgain::cli {

/// Pool size: `requested` if positive, else the hardware concurrency, capped
/// by the SGAIN_THREADS environment variable when set.
unsigned pool_size(int requested);

/// Calls task(i) for i in [0, count) on `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown after joining.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace sgain::cli
