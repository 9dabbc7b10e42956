#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace miirl {

/// Independent, reproducible stream seed for work unit `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Runs fn(0..n-1) on up to `jobs` threads. Each index is executed exactly once;
/// the first exception thrown by any unit is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Job count from MIIRL_JOBS, falling back to 1.
int default_jobs();

}  // namespace miirl
