#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "polya/core.hpp"

namespace polya {

/// Worker count for replica loops; 0 selects std::thread::hardware_concurrency.
void set_thread_count(unsigned threads);
unsigned thread_count();

inline constexpr std::int64_t kReplicaBlocks = 64;

/// Runs `n` replicas split into a fixed number of blocks. Block b draws from
/// rng.split(b) and accumulates into its own Acc; partial results are merged
/// in block order, so the outcome does not depend on the thread count.
///
/// fn(RandomSource& block_rng, std::int64_t replicas, Acc& acc)
template <class Acc, class Fn>
Acc run_replicas(std::int64_t n, const RandomSource& rng, Fn&& fn, Acc init = Acc{}) {
  const std::int64_t blocks = std::clamp<std::int64_t>(n, 1, kReplicaBlocks);
  std::vector<Acc> partial(static_cast<std::size_t>(blocks), init);
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t b = next++; b < blocks; b = next++) {
      const std::int64_t count = n / blocks + (b < n % blocks ? 1 : 0);
      RandomSource block_rng = rng.split(static_cast<std::uint64_t>(b));
      fn(block_rng, count, partial[static_cast<std::size_t>(b)]);
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::int64_t>(thread_count(), blocks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  Acc out = std::move(partial.front());
  for (std::size_t b = 1; b < partial.size(); ++b) out.merge(partial[b]);
  return out;
}

}  // namespace polya
