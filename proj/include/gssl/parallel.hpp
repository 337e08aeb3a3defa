#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <utility>
#include <vector>

namespace gssl {

namespace detail {
inline std::atomic<int>& thread_count_state() {
  static std::atomic<int> v{0};  // 0 = auto (hardware concurrency)
  return v;
}
}  // namespace detail

inline int thread_count() {
  int v = detail::thread_count_state().load(std::memory_order_relaxed);
  if (v > 0) return v;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

inline void set_thread_count(int t) {
  detail::thread_count_state().store(t > 0 ? t : 0, std::memory_order_relaxed);
}

/// Work is split into fixed-size blocks whose boundaries depend only on n and
/// grain, never on the thread count. Reductions store per-block partials and
/// combine them in block order, so every result is bit-identical for any
/// number of threads.
constexpr std::size_t kGrain = 4096;

inline std::size_t block_count(std::size_t n, std::size_t grain = kGrain) {
  return n == 0 ? 0 : (n + grain - 1) / grain;
}

/// f(block_index, begin, end)
template <class F>
void parallel_blocks(std::size_t n, F&& f, std::size_t grain = kGrain) {
  const std::size_t blocks = block_count(n, grain);
  if (blocks == 0) return;
  const int threads = thread_count();
  if (threads <= 1 || blocks == 1) {
    for (std::size_t b = 0; b < blocks; ++b) {
      std::size_t lo = b * grain;
      std::size_t hi = lo + grain < n ? lo + grain : n;
      f(b, lo, hi);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= blocks) return;
      std::size_t lo = b * grain;
      std::size_t hi = lo + grain < n ? lo + grain : n;
      f(b, lo, hi);
    }
  };
  std::size_t nw = std::size_t(threads) < blocks ? std::size_t(threads) : blocks;
  std::vector<std::thread> pool;
  pool.reserve(nw - 1);
  for (std::size_t t = 1; t < nw; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

template <class F>
void parallel_for(std::size_t n, F&& f, std::size_t grain = kGrain) {
  parallel_blocks(
      n,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      },
      grain);
}

template <class F>
double parallel_sum(std::size_t n, F&& per_index, std::size_t grain = kGrain) {
  const std::size_t blocks = block_count(n, grain);
  std::vector<double> partial(blocks, 0.0);
  parallel_blocks(
      n,
      [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += per_index(i);
        partial[b] = s;
      },
      grain);
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace gssl
