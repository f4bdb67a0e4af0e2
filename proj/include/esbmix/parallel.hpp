#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "esbmix/random.hpp"

namespace esbmix {

/// Splits `total` replicates into `workers` contiguous chunks; chunk i runs
/// fn(rng_i, begin, end) with its own stream Rng::stream(seed, i). Results
/// depend on (seed, workers) only, never on scheduling. Returns the
/// per-chunk results in chunk order for the caller to merge.
template <typename Result, typename Fn>
std::vector<Result> run_chunked(std::size_t total, unsigned workers, std::uint64_t seed, Fn fn) {
  workers = std::max(1u, workers);
  const std::size_t chunks = std::min<std::size_t>(workers, std::max<std::size_t>(total, 1));
  std::vector<Result> results(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  auto body = [&](std::size_t c) {
    try {
      const std::size_t begin = total * c / chunks;
      const std::size_t end = total * (c + 1) / chunks;
      Rng rng = Rng::stream(seed, c);
      results[c] = fn(rng, begin, end);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (chunks == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) pool.emplace_back(body, c);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace esbmix
