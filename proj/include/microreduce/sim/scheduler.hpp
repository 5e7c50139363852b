#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "microreduce/core/clock.hpp"
#include "microreduce/sim/task.hpp"

namespace microreduce::sim {

using core::VirtualTime;

/// Single-threaded discrete-event scheduler. Coroutines suspend on virtual
/// time and are resumed in (time, tie-break, insertion) order. With an
/// interleave seed, events due at the same instant are resumed in a seeded
/// random order instead of insertion order.
class Scheduler final : public core::Clock {
 public:
  explicit Scheduler(std::optional<std::uint64_t> interleave_seed = std::nullopt);
  ~Scheduler() override;

  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  VirtualTime now() const override { return now_; }

  void schedule(VirtualTime at, std::coroutine_handle<> handle);

  /// Runs `task` as an independent root, starting at the current instant.
  /// An exception escaping a root aborts run() and is rethrown from it.
  void spawn(Task<void> task);

  /// Processes events until none remain.
  void run();
  /// Processes events due at or before `limit`, then sets the clock to `limit`.
  void run_until(VirtualTime limit);

  std::size_t pending_events() const { return queue_.size(); }
  std::uint64_t processed_events() const { return processed_; }

  struct SleepAwaiter {
    Scheduler& scheduler;
    VirtualTime at;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) { scheduler.schedule(at, h); }
    void await_resume() const noexcept {}
  };
  /// Suspends until `at` (or the current instant, if `at` is in the past).
  SleepAwaiter sleep_until(VirtualTime at) { return {*this, at < now_ ? now_ : at}; }
  SleepAwaiter sleep_for_ms(double ms) { return sleep_until(now_ + core::ms_to_virtual(ms)); }
  /// Lets every other event due now run first.
  SleepAwaiter yield() { return {*this, now_}; }

 private:
  struct Event {
    VirtualTime at;
    std::uint64_t tie;
    std::uint64_t seq;
    std::coroutine_handle<> handle;
    bool operator>(const Event& o) const {
      if (at != o.at) return at > o.at;
      if (tie != o.tie) return tie > o.tie;
      return seq > o.seq;
    }
  };

  struct Root;
  Root launch(Task<void> task);
  bool step(std::optional<VirtualTime> limit);

  VirtualTime now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
  std::optional<std::mt19937_64> tie_rng_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::unordered_set<void*> live_roots_;
  std::exception_ptr failure_;
};

/// One-shot broadcast: waiters resume (through the scheduler) once set() is called.
class Event {
 public:
  explicit Event(Scheduler& scheduler) : scheduler_(scheduler) {}

  void set();
  bool is_set() const { return set_; }

  struct Awaiter {
    Event& event;
    bool await_ready() const noexcept { return event.set_; }
    void await_suspend(std::coroutine_handle<> h) { event.waiters_.push_back(h); }
    void await_resume() const noexcept {}
  };
  Awaiter wait() { return {*this}; }

 private:
  Scheduler& scheduler_;
  bool set_ = false;
  std::vector<std::coroutine_handle<>> waiters_;
};

/// Counting semaphore with FIFO hand-off.
class Semaphore {
 public:
  Semaphore(Scheduler& scheduler, std::size_t permits) : scheduler_(scheduler), available_(permits) {}

  struct Awaiter {
    Semaphore& sem;
    bool await_ready() noexcept {
      if (sem.available_ > 0 && sem.waiters_.empty()) {
        --sem.available_;
        return true;
      }
      return false;
    }
    void await_suspend(std::coroutine_handle<> h) { sem.waiters_.push_back(h); }
    void await_resume() const noexcept {}
  };
  Awaiter acquire() { return {*this}; }
  void release();

  std::size_t available() const { return available_; }
  std::size_t waiting() const { return waiters_.size(); }

 private:
  Scheduler& scheduler_;
  std::size_t available_;
  std::deque<std::coroutine_handle<>> waiters_;
};

namespace detail {

template <typename T>
struct JoinState {
  explicit JoinState(Scheduler& s, std::size_t n) : results(n), remaining(n), done(s) {}
  std::vector<std::optional<T>> results;
  std::exception_ptr error;
  std::size_t remaining;
  Event done;
};

template <>
struct JoinState<void> {
  explicit JoinState(Scheduler& s, std::size_t n) : remaining(n), done(s) {}
  std::exception_ptr error;
  std::size_t remaining;
  Event done;
};

template <typename T>
Task<void> join_one(Task<T> task, std::shared_ptr<JoinState<T>> state, std::size_t index) {
  try {
    if constexpr (std::is_void_v<T>) {
      co_await std::move(task);
    } else {
      state->results[index].emplace(co_await std::move(task));
    }
  } catch (...) {
    if (!state->error) state->error = std::current_exception();
  }
  if (--state->remaining == 0) state->done.set();
}

}  // namespace detail

/// Runs every task concurrently and completes when all have finished. The
/// first exception (by completion order) is rethrown after the others finish.
template <typename T>
  requires(!std::is_void_v<T>)
Task<std::vector<T>> when_all(Scheduler& scheduler, std::vector<Task<T>> tasks) {
  auto state = std::make_shared<detail::JoinState<T>>(scheduler, tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    scheduler.spawn(detail::join_one<T>(std::move(tasks[i]), state, i));
  }
  if (!tasks.empty()) co_await state->done.wait();
  if (state->error) std::rethrow_exception(state->error);
  std::vector<T> out;
  out.reserve(state->results.size());
  for (auto& r : state->results) out.push_back(std::move(*r));
  co_return out;
}

inline Task<void> when_all(Scheduler& scheduler, std::vector<Task<void>> tasks) {
  auto state = std::make_shared<detail::JoinState<void>>(scheduler, tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    scheduler.spawn(detail::join_one<void>(std::move(tasks[i]), state, i));
  }
  if (!tasks.empty()) co_await state->done.wait();
  if (state->error) std::rethrow_exception(state->error);
}

}  // namespace microreduce::sim
