#pragma once

#include <cstddef>
#include <functional>

namespace bpi {

/// Number of worker threads used by parallel loops (default 1).
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks;
/// callers write results by index so output never depends on scheduling.
/// The first exception thrown (lowest block) is rethrown after all join.
/// Nested calls from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bpi
