#include "kmarket/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kmarket {

namespace {
std::atomic<unsigned> g_threads{1};
constexpr std::size_t kMinChunk = 2048;
}  // namespace

void set_thread_count(unsigned threads) noexcept {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  g_threads.store(threads);
}

unsigned thread_count() noexcept { return g_threads.load(); }

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(
      thread_count(), std::max<std::size_t>(1, n / kMinChunk));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kLeaf = 64;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double shifted_mean(std::span<const double> values) noexcept {
  const double ref = values.front();
  constexpr std::size_t kBlock = 1024;
  std::vector<double> partial;
  partial.reserve(values.size() / kBlock + 1);
  for (std::size_t i = 0; i < values.size(); i += kBlock) {
    double s = 0.0;
    const std::size_t end = std::min(values.size(), i + kBlock);
    for (std::size_t j = i; j < end; ++j) s += values[j] - ref;
    partial.push_back(s);
  }
  return ref + pairwise_sum(partial) / static_cast<double>(values.size());
}

}  // namespace kmarket
