#pragma once

#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <functional>

namespace floodgraph {

/// Malformed input file (bad header line, unparsable token).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Declared dimensions disagree with the data actually present.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two rasters that must share georeferencing do not.
struct GeorefError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sampling request cannot be satisfied by the eligible population.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Run `fn(i)` for i in [0, n). Work is chunked across hardware threads;
/// each index writes only its own output slot, so results are identical to
/// sequential execution.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t nthreads = std::thread::hardware_concurrency();
  if (nthreads == 0) nthreads = 1;
  if (nthreads > n) nthreads = n;
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace floodgraph
