#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace kmarket {

/// Process-wide cap on worker threads. 0 means hardware concurrency.
void set_thread_count(unsigned threads) noexcept;
unsigned thread_count() noexcept;

/// Runs body(begin, end) over a partition of [0, n). Callers must only touch
/// per-index state; anything order-dependent belongs in a sequential pass.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Sum in a fixed pairwise order, independent of the thread count.
double pairwise_sum(std::span<const double> values) noexcept;

/// Arithmetic mean computed as ref + mean(v - ref) with ref = v[0]; returns
/// exactly v[0] when all entries are equal. Requires a non-empty span.
double shifted_mean(std::span<const double> values) noexcept;

}  // namespace kmarket
