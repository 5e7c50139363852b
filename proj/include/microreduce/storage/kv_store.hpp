#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "microreduce/core/clock.hpp"
#include "microreduce/core/execution_id.hpp"
#include "microreduce/core/records.hpp"
#include "microreduce/storage/shuffle_entry.hpp"

namespace microreduce::storage {

struct ThrottlePolicy {
  double sustained_ops_per_sec = 0.0;
  double burst_capacity = 0.0;
  bool enabled = false;
};

/// Token bucket refilled continuously at `sustained_ops_per_sec` on the given
/// clock, holding at most `burst_capacity` tokens. Starts full.
class TokenBucket {
 public:
  TokenBucket(ThrottlePolicy policy, const core::Clock& clock);

  bool try_acquire(double tokens = 1.0);
  double available();
  const ThrottlePolicy& policy() const { return policy_; }

 private:
  void refill();

  ThrottlePolicy policy_;
  const core::Clock& clock_;
  double tokens_;
  core::VirtualTime last_refill_;
};

/// Shuffle table item. Primary key (hash_key, sort_key); local secondary index
/// (hash_key, lsi_sort_key).
struct KvItem {
  std::string hash_key;
  std::string sort_key;
  std::string lsi_sort_key;
  ShuffleEntry payload;
};

enum class PutStatus { ack, throttled };

/// Results table row: (execution_id, carrier, delay_sum, count).
struct ResultRow {
  std::string execution_id;
  std::string carrier;
  std::int64_t delay_sum = 0;
  std::int64_t count = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Emulated key-value service holding three tables: the shuffle table (with
/// LSI and write throttling), the job counter table, and the results table.
/// All operations are serialized; counter updates are linearizable.
class KvStore {
 public:
  explicit KvStore(const core::Clock& clock, ThrottlePolicy throttle = {});

  // Shuffle table.
  PutStatus put(KvItem item);
  std::optional<KvItem> get(std::string_view hash_key, std::string_view sort_key) const;
  bool erase(std::string_view hash_key, std::string_view sort_key);
  /// Entries under (hash_key, lsi_sort_key), ordered by the index then by sort key.
  std::vector<ShuffleEntry> query_lsi(std::string_view hash_key, std::string_view lsi_sort_key) const;
  /// Every item under hash_key in primary sort-key order.
  std::vector<KvItem> scan(std::string_view hash_key) const;
  std::vector<std::string> distinct_lsi_keys(std::string_view hash_key) const;
  std::size_t item_count() const;
  std::size_t item_count(std::string_view hash_key) const;
  std::uint64_t throttled_writes() const;

  // Counter table.
  std::int64_t counter_add(const core::ExecutionId& id, core::CounterField field, std::int64_t delta);
  core::JobCounters counters(const core::ExecutionId& id) const;

  // Results table.
  void put_result(ResultRow row);
  std::vector<ResultRow> results(std::string_view execution_id) const;
  void put_ranking(const core::ExecutionId& id, core::RankingResult ranking);
  std::optional<core::RankingResult> ranking(const core::ExecutionId& id) const;

 private:
  struct Partition {
    std::map<std::string, KvItem, std::less<>> items;
    std::set<std::pair<std::string, std::string>, std::less<>> lsi;  // (lsi_sort_key, sort_key)
  };

  mutable std::mutex mu_;
  std::map<std::string, Partition, std::less<>> shuffle_;
  std::optional<TokenBucket> bucket_;
  std::uint64_t throttled_ = 0;
  std::unordered_map<std::string, std::pair<std::int64_t, std::int64_t>> counters_;
  std::map<std::pair<std::string, std::string>, ResultRow> results_;
  std::unordered_map<std::string, core::RankingResult> rankings_;
};

}  // namespace microreduce::storage
