#pragma once

#include <cstddef>
#include <functional>

namespace spellattack {

/// Worker count from SPELLATTACK_WORKERS, falling back to the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Run body(i) for i in [0, n) on up to worker_count() threads. Each index
/// is processed exactly once; results must be written to per-index slots so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace spellattack
