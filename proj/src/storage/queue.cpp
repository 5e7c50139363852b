#include "microreduce/storage/queue.hpp"

#include <algorithm>
#include <iterator>

#include "microreduce/core/errors.hpp"

namespace microreduce::storage {

namespace {

std::string format_message_id(std::uint64_t seq) {
  std::string digits = std::to_string(seq);
  return "msg-" + std::string(digits.size() < 8 ? 8 - digits.size() : 0, '0') + digits;
}

}  // namespace

MessageQueue::MessageQueue(const core::Clock& clock, QueuePolicy policy, std::string name)
    : clock_(clock), policy_(policy), name_(std::move(name)) {
  if (policy.max_receives < 1) throw InvalidArgument("max_receives must be at least 1");
  if (policy.visibility_timeout_ms < 0.0) throw InvalidArgument("visibility timeout must be non-negative");
  if (policy.shuffle_seed) shuffle_rng_.emplace(*policy.shuffle_seed);
}

std::string MessageQueue::send(std::string body) {
  std::lock_guard lock(mu_);
  const std::uint64_t seq = next_seq_++;
  Stored stored{QueueMessage{format_message_id(seq), std::move(body), 0, clock_.now(), {}}, seq};
  std::string id = stored.message.message_id;
  schedule_.emplace(stored.message.visible_at, seq);
  messages_.emplace(seq, std::move(stored));
  ++stats_.sent;
  return id;
}

std::vector<QueueMessage> MessageQueue::receive(std::size_t max_messages) {
  if (max_messages == 0) throw InvalidArgument("receive needs max_messages >= 1");
  std::lock_guard lock(mu_);
  const auto now = clock_.now();
  const auto visible_end = schedule_.upper_bound({now, UINT64_MAX});
  std::vector<QueueMessage> out;

  auto take = [&](std::set<ReadyKey>::iterator it) {
    const std::uint64_t seq = it->second;
    schedule_.erase(it);
    auto node = messages_.find(seq);
    QueueMessage& msg = node->second.message;
    if (msg.receive_count >= policy_.max_receives) {
      msg.receipt.clear();
      dlq_.push_back(std::move(msg));
      messages_.erase(node);
      ++stats_.dead_lettered;
      return;
    }
    ++msg.receive_count;
    msg.visible_at = now + core::ms_to_virtual(policy_.visibility_timeout_ms);
    msg.receipt = msg.message_id + "#" + std::to_string(msg.receive_count);
    schedule_.emplace(msg.visible_at, seq);
    ++stats_.received;
    out.push_back(msg);
  };

  if (!shuffle_rng_) {
    std::vector<std::uint64_t> delivered;
    auto it = schedule_.begin();
    while (it != schedule_.end() && it->first <= now && out.size() < max_messages) {
      auto next = std::next(it);
      // A zero visibility timeout re-inserts the message at `now`; never hand it out twice per call.
      if (std::find(delivered.begin(), delivered.end(), it->second) == delivered.end()) {
        delivered.push_back(it->second);
        take(it);
      }
      it = next;
    }
  } else {
    std::vector<ReadyKey> due(schedule_.begin(), visible_end);
    while (out.size() < max_messages && !due.empty()) {
      const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, due.size() - 1)(*shuffle_rng_);
      const ReadyKey key = due[pick];
      due[pick] = due.back();
      due.pop_back();
      take(schedule_.find(key));
    }
  }
  return out;
}

bool MessageQueue::remove(std::string_view receipt) {
  const auto hash = receipt.rfind('#');
  if (hash == std::string_view::npos) return false;
  const auto id = receipt.substr(0, hash);
  if (!id.starts_with("msg-")) return false;
  std::uint64_t seq = 0;
  for (char c : id.substr(4)) {
    if (c < '0' || c > '9') return false;
    seq = seq * 10 + static_cast<std::uint64_t>(c - '0');
  }
  std::lock_guard lock(mu_);
  const auto it = messages_.find(seq);
  if (it == messages_.end() || it->second.message.receipt != receipt) return false;
  schedule_.erase({it->second.message.visible_at, seq});
  messages_.erase(it);
  ++stats_.deleted;
  return true;
}

std::size_t MessageQueue::visible_count() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::distance(schedule_.begin(), schedule_.upper_bound({clock_.now(), UINT64_MAX})));
}

std::size_t MessageQueue::in_flight_count() const {
  std::lock_guard lock(mu_);
  const auto now = clock_.now();
  std::size_t n = 0;
  for (const auto& [seq, stored] : messages_) {
    if (stored.message.receive_count > 0 && stored.message.visible_at > now) ++n;
  }
  return n;
}

std::size_t MessageQueue::size() const {
  std::lock_guard lock(mu_);
  return messages_.size();
}

std::vector<QueueMessage> MessageQueue::dead_letters() const {
  std::lock_guard lock(mu_);
  return dlq_;
}

QueueStats MessageQueue::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace microreduce::storage
