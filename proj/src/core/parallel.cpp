#include "gpchaos/core/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace gpchaos::core {

int configure_threads_from_env() {
  if (const char* env = std::getenv("GPCHAOS_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // ignored: a malformed cap leaves the runtime default in place
    }
  }
  return omp_get_max_threads();
}

int max_threads() { return omp_get_max_threads(); }

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 64;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace gpchaos::core
