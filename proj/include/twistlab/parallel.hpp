#pragma once

#include <cstddef>
#include <functional>

namespace twistlab {

/// Number of worker threads used by parallel loops (process-wide, >= 1).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Iterations are split into contiguous static
/// chunks, so every index is written by exactly one worker and results never
/// depend on the worker count as long as body(i) only touches slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic pairwise sum: the association tree depends only on the
/// length of the range.
double pairwise_sum(const double* data, std::size_t n);

}  // namespace twistlab
