#pragma once

#include <cstddef>
#include <functional>

namespace persim {

/// Number of workers used when a caller passes 0.
unsigned default_worker_count();

/// Runs fn(i) for every i in [0, count) across up to `workers` threads
/// (0 = hardware default). Callers must write results into index-addressed
/// slots; the schedule is work-stealing and nondeterministic, the outputs
/// must not be. The first exception thrown by fn is rethrown after join.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace persim
