#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace soforest {

// Runs f(index, worker) for every index in [0, n). Worker w takes the
// strided slice w, w + W, w + 2W, ... so the index-to-worker assignment is
// a pure function of (n, W). With one worker everything runs inline.
template <typename F>
void parallel_for(std::size_t n, std::size_t n_workers, F&& f) {
  if (n == 0) return;
  std::size_t w = n_workers < 1 ? 1 : n_workers;
  if (w > n) w = n;
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i, std::size_t{0});
    return;
  }

  std::vector<std::thread> threads;
  threads.reserve(w);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t wi = 0; wi < w; ++wi) {
    threads.emplace_back([&, wi] {
      try {
        for (std::size_t i = wi; i < n; i += w) f(i, wi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace soforest
