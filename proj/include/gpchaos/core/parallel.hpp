#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gpchaos::core {

/// Applies the GPCHAOS_THREADS environment cap (if set) to the OpenMP runtime.
/// Returns the worker count in effect.
int configure_threads_from_env();

int max_threads();

/// Pairwise (cascade) summation in a fixed order.
double pairwise_sum(std::span<const double> values);

// Fixed block length for deterministic reductions. The block layout depends
// only on the problem size, never on the thread count.
inline constexpr std::size_t kReductionBlock = 4096;

/// Deterministic parallel sum of term(i) for i in [0, count).
/// Blocks of kReductionBlock terms are summed sequentially (possibly in
/// parallel across blocks) and the block sums are combined pairwise.
template <class Term>
double deterministic_sum(std::size_t count, Term&& term) {
  const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = begin + kReductionBlock < count ? begin + kReductionBlock : count;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  return pairwise_sum(partial);
}

/// Parallel elementwise loop; body(i) must only write to slot i.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    body(static_cast<std::size_t>(i));
  }
}

}  // namespace gpchaos::core
