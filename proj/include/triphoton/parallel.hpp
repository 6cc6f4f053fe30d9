#ifndef TRIPHOTON_PARALLEL_HPP
#define TRIPHOTON_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace triphoton {

// Worker count: TRIPHOTON_THREADS overrides, otherwise hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("TRIPHOTON_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
// Block boundaries do not depend on the thread count, so any per-block
// work (e.g. RNG streams keyed on block_index) gives identical results
// for 1 or many threads. Callers reduce per-block results in block order.
inline void for_each_block(std::size_t n, std::size_t block_size,
                           const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  const int workers = std::min<std::size_t>(thread_count(), n_blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b)
      fn(b, b * block_size, std::min(n, (b + 1) * block_size));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= n_blocks) return;
        fn(b, b * block_size, std::min(n, (b + 1) * block_size));
      }
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace triphoton

#endif
