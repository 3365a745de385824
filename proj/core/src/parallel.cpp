#include "bpi/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace bpi {

namespace {
std::atomic<unsigned> g_threads{1};
thread_local bool t_inside = false;
}

void set_num_threads(unsigned n) { g_threads.store(std::max(1u, n)); }

unsigned num_threads() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(num_threads(), std::max<std::size_t>(n, 1));
  if (workers <= 1 || t_inside) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      t_inside = true;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace bpi
