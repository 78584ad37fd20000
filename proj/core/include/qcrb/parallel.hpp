#pragma once

#include <functional>

namespace qcrb {

/// Worker count resolution: explicit value if > 0, else the QCRB_WORKERS
/// environment variable, else hardware concurrency. Results never depend on
/// the worker count; only wall time does.
int resolve_worker_count(int requested);

/// Runs fn(0..count-1) across `workers` threads. Callers must write results
/// into per-index slots; scheduling order is unspecified. The first
/// exception escaping fn is rethrown on the calling thread after join.
void parallel_for(long count, int workers, const std::function<void(long)>& fn);

} // namespace qcrb
