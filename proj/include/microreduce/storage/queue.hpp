#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "microreduce/core/clock.hpp"

namespace microreduce::storage {

struct QueuePolicy {
  double visibility_timeout_ms = 30000.0;
  int max_receives = 3;
  /// When set, receive() hands out visible messages in a seeded random order
  /// instead of oldest-first.
  std::optional<std::uint64_t> shuffle_seed;
};

struct QueueMessage {
  std::string message_id;
  std::string body;
  int receive_count = 0;
  core::VirtualTime visible_at = 0;
  /// Token for the current delivery; only the latest receipt can delete.
  std::string receipt;
};

struct QueueStats {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t deleted = 0;
  std::uint64_t dead_lettered = 0;
};

/// At-least-once queue with visibility timeouts and a dead-letter queue.
/// A message whose receive_count has reached max_receives is moved to the
/// DLQ the next time it would otherwise be delivered.
class MessageQueue {
 public:
  MessageQueue(const core::Clock& clock, QueuePolicy policy = {}, std::string name = "queue");

  const std::string& name() const { return name_; }
  const QueuePolicy& policy() const { return policy_; }

  std::string send(std::string body);
  std::vector<QueueMessage> receive(std::size_t max_messages);
  /// Returns false for unknown or superseded receipts.
  bool remove(std::string_view receipt);

  /// Messages deliverable right now.
  std::size_t visible_count() const;
  /// Messages received but neither deleted nor yet visible again.
  std::size_t in_flight_count() const;
  /// Messages not yet deleted or dead-lettered.
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  std::vector<QueueMessage> dead_letters() const;
  QueueStats stats() const;

 private:
  struct Stored {
    QueueMessage message;
    std::uint64_t seq;
  };
  using ReadyKey = std::pair<core::VirtualTime, std::uint64_t>;

  const core::Clock& clock_;
  QueuePolicy policy_;
  std::string name_;
  mutable std::mutex mu_;
  std::uint64_t next_seq_ = 0;
  std::map<std::uint64_t, Stored> messages_;
  std::set<ReadyKey> schedule_;  // (visible_at, seq)
  std::vector<QueueMessage> dlq_;
  std::optional<std::mt19937_64> shuffle_rng_;
  QueueStats stats_;
};

}  // namespace microreduce::storage
