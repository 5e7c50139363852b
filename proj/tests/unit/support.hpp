#pragma once

#include <optional>
#include <random>
#include <utility>

#include "microreduce/sim/scheduler.hpp"
#include "microreduce/sim/task.hpp"

namespace testing {

template <typename T>
microreduce::sim::Task<void> capture(microreduce::sim::Task<T> task, std::optional<T>& out) {
  out.emplace(co_await std::move(task));
}

/// Runs `task` on `scheduler` until no events remain and returns its value.
template <typename T>
T run(microreduce::sim::Scheduler& scheduler, microreduce::sim::Task<T> task) {
  std::optional<T> out;
  scheduler.spawn(capture(std::move(task), out));
  scheduler.run();
  return std::move(*out);
}

inline void run(microreduce::sim::Scheduler& scheduler, microreduce::sim::Task<void> task) {
  scheduler.spawn(std::move(task));
  scheduler.run();
}

inline std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

}  // namespace testing
