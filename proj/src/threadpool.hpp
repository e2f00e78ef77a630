#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kin {

// Persistent worker pool for index-parallel loops. Work is split into
// contiguous static chunks, so two runs with the same thread count touch the
// same indices from the same workers; callers that need thread-count-
// independent results must make the per-index work independent (all users in
// this project do).
class ThreadPool {
public:
  explicit ThreadPool(int threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(i) for i in [0, count). fn(i) receives the worker slot as the
  // second argument (0 = calling thread) for per-thread scratch lookup.
  void parallel_for(std::size_t count,
                    const std::function<void(std::size_t, int)>& fn);

private:
  struct Task {
    const std::function<void(std::size_t, int)>* fn = nullptr;
    std::size_t begin = 0, end = 0;
    int slot = 0;
  };

  void worker_loop(int slot);

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  std::vector<Task> tasks_;
  std::size_t pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

} // namespace kin
