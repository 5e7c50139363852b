#include "microreduce/sim/scheduler.hpp"

#include <utility>

namespace microreduce::sim {

struct Scheduler::Root {
  struct promise_type {
    Scheduler* scheduler = nullptr;

    Root get_return_object() noexcept { return Root{std::coroutine_handle<promise_type>::from_promise(*this)}; }
    std::suspend_always initial_suspend() noexcept { return {}; }

    struct Release {
      bool await_ready() const noexcept { return false; }
      void await_suspend(std::coroutine_handle<promise_type> h) noexcept {
        h.promise().scheduler->live_roots_.erase(h.address());
        h.destroy();
      }
      void await_resume() const noexcept {}
    };
    Release final_suspend() noexcept { return {}; }
    void return_void() noexcept {}
    void unhandled_exception() noexcept { std::terminate(); }
  };

  std::coroutine_handle<promise_type> handle;
};

Scheduler::Scheduler(std::optional<std::uint64_t> interleave_seed) {
  if (interleave_seed) tie_rng_.emplace(*interleave_seed);
}

Scheduler::~Scheduler() {
  while (!queue_.empty()) queue_.pop();
  auto roots = std::exchange(live_roots_, {});
  for (void* address : roots) std::coroutine_handle<>::from_address(address).destroy();
}

void Scheduler::schedule(VirtualTime at, std::coroutine_handle<> handle) {
  const std::uint64_t tie = tie_rng_ ? (*tie_rng_)() : 0;
  queue_.push(Event{at < now_ ? now_ : at, tie, seq_++, handle});
}

Scheduler::Root Scheduler::launch(Task<void> task) {
  try {
    co_await std::move(task);
  } catch (...) {
    if (!failure_) failure_ = std::current_exception();
  }
}

void Scheduler::spawn(Task<void> task) {
  Root root = launch(std::move(task));
  root.handle.promise().scheduler = this;
  live_roots_.insert(root.handle.address());
  schedule(now_, root.handle);
}

bool Scheduler::step(std::optional<VirtualTime> limit) {
  if (queue_.empty()) return false;
  if (limit && queue_.top().at > *limit) return false;
  Event event = queue_.top();
  queue_.pop();
  now_ = event.at;
  ++processed_;
  event.handle.resume();
  if (failure_) std::rethrow_exception(std::exchange(failure_, nullptr));
  return true;
}

void Scheduler::run() {
  while (step(std::nullopt)) {
  }
}

void Scheduler::run_until(VirtualTime limit) {
  while (step(limit)) {
  }
  if (now_ < limit) now_ = limit;
}

void Event::set() {
  if (set_) return;
  set_ = true;
  for (auto h : std::exchange(waiters_, {})) scheduler_.schedule(scheduler_.now(), h);
}

void Semaphore::release() {
  if (!waiters_.empty()) {
    auto next = waiters_.front();
    waiters_.pop_front();
    scheduler_.schedule(scheduler_.now(), next);
  } else {
    ++available_;
  }
}

}  // namespace microreduce::sim
