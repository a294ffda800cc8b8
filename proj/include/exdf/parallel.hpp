#pragma once

#include <cstddef>
#include <functional>

namespace exdf {

/// Worker count: EXDF_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
int thread_limit();

/// Runs task(0..n-1) on up to `threads` workers. Tasks must write only to
/// their own outputs; the first exception thrown is rethrown after all
/// workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task, int threads = 0);

} // namespace exdf
