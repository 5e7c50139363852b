#include "microreduce/runtime/queue_source.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <utility>

namespace microreduce::runtime {

namespace {

class BatchFailure : public Error {
 public:
  using Error::Error;
};

constexpr double kMinuteMs = 60000.0;

}  // namespace

QueueSource::QueueSource(Runtime& runtime, storage::MessageQueue& queue, FunctionConfig function,
                         MessageHandler handler, ExecutionOf execution_of, QueueSourceConfig config)
    : runtime_(runtime),
      queue_(queue),
      function_(std::move(function)),
      handler_(std::move(handler)),
      execution_of_(std::move(execution_of)),
      config_(config),
      drained_(runtime.scheduler()) {
  function_.validate();
  if (config_.batch_size == 0) throw InvalidArgument("queue source batch size must be positive");
}

std::size_t QueueSource::pool_cap() const {
  return std::min(runtime_.limits().queue_scale_cap, runtime_.limits().account_concurrency);
}

void QueueSource::start() {
  if (started_) return;
  started_ = true;
  add_pollers(1);
  runtime_.scheduler().spawn(scaler());
}

void QueueSource::stop_when_drained() { stopping_ = true; }

void QueueSource::add_pollers(std::size_t n) {
  n = std::min(n, pool_cap() - pool_size_);
  if (n == 0) return;
  pool_size_ += n;
  live_pollers_ += n;
  pool_history_.emplace_back(runtime_.scheduler().now(), pool_size_);
  for (std::size_t i = 0; i < n; ++i) runtime_.scheduler().spawn(poller());
}

sim::Task<void> QueueSource::scaler() {
  auto& sched = runtime_.scheduler();
  while (true) {
    co_await sched.sleep_for_ms(kMinuteMs);
    if (stopping_ && live_pollers_ == 0) {
      drained_.set();
      co_return;
    }
    if (queue_.visible_count() > 0) add_pollers(runtime_.limits().queue_scale_per_min);
  }
}

sim::Task<void> QueueSource::run_batch(InvocationContext& ctx, std::vector<storage::QueueMessage> messages,
                                       std::shared_ptr<std::vector<bool>> processed) {
  std::string first_error;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    try {
      co_await handler_(ctx, messages[i]);
      (*processed)[i] = true;
    } catch (const TimeoutError&) {
      throw;
    } catch (const std::exception& e) {
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) throw BatchFailure(first_error);
}

sim::Task<void> QueueSource::poller() {
  auto& sched = runtime_.scheduler();
  while (true) {
    if (stopping_ && queue_.empty()) break;
    auto messages = queue_.receive(config_.batch_size);
    if (messages.empty()) {
      co_await sched.sleep_for_ms(runtime_.calibration().queue_idle_poll_ms);
      continue;
    }
    auto processed = std::make_shared<std::vector<bool>>(messages.size(), false);
    const std::string eid = execution_of_(messages.front());
    Runtime::Handler handler = [this, messages, processed](InvocationContext& ctx) {
      return run_batch(ctx, messages, processed);
    };
    const InvocationRecord rec = co_await runtime_.invoke(function_, eid, std::move(handler));
    ++stats_.invocations;
    if (rec.outcome != Outcome::ok) ++stats_.failed_invocations;
    for (std::size_t i = 0; i < messages.size(); ++i) {
      if ((*processed)[i]) {
        queue_.remove(messages[i].receipt);
        ++stats_.messages_processed;
      } else {
        ++stats_.messages_failed;
      }
    }
  }
  --live_pollers_;
}

}  // namespace microreduce::runtime
