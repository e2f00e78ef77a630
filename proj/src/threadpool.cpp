#include "threadpool.hpp"

namespace kin {

ThreadPool::ThreadPool(int threads) {
  const int extra = threads > 1 ? threads - 1 : 0;
  tasks_.resize(extra);
  workers_.reserve(extra);
  for (int i = 0; i < extra; ++i) {
    workers_.emplace_back([this, i] { worker_loop(i); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& w : workers_) {
    w.join();
  }
}

void ThreadPool::parallel_for(std::size_t count,
                              const std::function<void(std::size_t, int)>& fn) {
  const std::size_t slots = workers_.size() + 1;
  if (count == 0) return;
  if (slots == 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0);
    return;
  }

  // Chunk c covers [c*count/slots, (c+1)*count/slots); chunk 0 runs inline.
  {
    std::lock_guard lock(mu_);
    pending_ = 0;
    for (std::size_t c = 1; c < slots; ++c) {
      Task& t = tasks_[c - 1];
      t.fn = &fn;
      t.begin = c * count / slots;
      t.end = (c + 1) * count / slots;
      t.slot = static_cast<int>(c);
      if (t.begin < t.end) ++pending_;
    }
    ++generation_;
  }
  cv_work_.notify_all();

  const std::size_t end0 = count / slots;
  for (std::size_t i = 0; i < end0; ++i) fn(i, 0);

  std::unique_lock lock(mu_);
  cv_done_.wait(lock, [this] { return pending_ == 0; });
}

void ThreadPool::worker_loop(int slot) {
  std::uint64_t seen = 0;
  for (;;) {
    Task task;
    {
      std::unique_lock lock(mu_);
      cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      task = tasks_[slot];
    }
    if (task.begin < task.end) {
      for (std::size_t i = task.begin; i < task.end; ++i) {
        (*task.fn)(i, task.slot);
      }
      bool done;
      {
        std::lock_guard lock(mu_);
        done = --pending_ == 0;
      }
      if (done) cv_done_.notify_one();
    }
  }
}

} // namespace kin
