#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "microreduce/runtime/runtime.hpp"
#include "microreduce/sim/scheduler.hpp"
#include "microreduce/storage/queue.hpp"

namespace microreduce::runtime {

struct QueueSourceConfig {
  /// Messages handed to one invocation.
  std::size_t batch_size = 1;
};

struct QueueSourceStats {
  std::uint64_t invocations = 0;
  std::uint64_t failed_invocations = 0;
  std::uint64_t messages_processed = 0;
  std::uint64_t messages_failed = 0;
};

/// Event-source mapping from a queue to a function. The poller pool starts at
/// one and, at every virtual minute with a visible backlog, grows by
/// queue_scale_per_min up to min(queue_scale_cap, account_concurrency).
/// Messages whose handler succeeded are deleted; failed ones are left for
/// redelivery (and eventually the DLQ).
class QueueSource {
 public:
  using MessageHandler = std::function<sim::Task<void>(InvocationContext&, const storage::QueueMessage&)>;
  using ExecutionOf = std::function<std::string(const storage::QueueMessage&)>;

  QueueSource(Runtime& runtime, storage::MessageQueue& queue, FunctionConfig function, MessageHandler handler,
              ExecutionOf execution_of, QueueSourceConfig config = {});

  void start();
  /// Pollers exit once the queue holds no messages (visible or in flight).
  void stop_when_drained();
  /// Set once every poller and the scaler have exited after
  /// stop_when_drained(). The scaler notices at its next minute tick; the
  /// source must stay alive until then.
  sim::Event& drained() { return drained_; }

  std::size_t pool_size() const { return pool_size_; }
  std::size_t pool_cap() const;
  const std::vector<std::pair<core::VirtualTime, std::size_t>>& pool_history() const { return pool_history_; }
  const QueueSourceStats& stats() const { return stats_; }

 private:
  sim::Task<void> poller();
  sim::Task<void> scaler();
  void add_pollers(std::size_t n);
  sim::Task<void> run_batch(InvocationContext& ctx, std::vector<storage::QueueMessage> messages,
                            std::shared_ptr<std::vector<bool>> processed);

  Runtime& runtime_;
  storage::MessageQueue& queue_;
  FunctionConfig function_;
  MessageHandler handler_;
  ExecutionOf execution_of_;
  QueueSourceConfig config_;
  bool started_ = false;
  bool stopping_ = false;
  std::size_t pool_size_ = 0;
  std::size_t live_pollers_ = 0;
  std::vector<std::pair<core::VirtualTime, std::size_t>> pool_history_;
  QueueSourceStats stats_;
  sim::Event drained_;
};

}  // namespace microreduce::runtime
