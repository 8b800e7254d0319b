#pragma once

#include <cstddef>
#include <functional>

namespace relmmd {

/// Worker count: hardware concurrency, capped by RELMMD_THREADS when that is a
/// positive integer.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
/// index is processed exactly once; callers write results into slot i, so the
/// outcome does not depend on scheduling. The exception of the lowest failing
/// index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace relmmd
