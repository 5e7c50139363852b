#include "microreduce/storage/kv_store.hpp"

#include <algorithm>

#include "microreduce/core/errors.hpp"

namespace microreduce::storage {

TokenBucket::TokenBucket(ThrottlePolicy policy, const core::Clock& clock)
    : policy_(policy), clock_(clock), tokens_(policy.burst_capacity), last_refill_(clock.now()) {
  if (policy.sustained_ops_per_sec < 0.0 || policy.burst_capacity < 0.0) {
    throw InvalidArgument("throttle rates must be non-negative");
  }
}

void TokenBucket::refill() {
  const auto now = clock_.now();
  if (now > last_refill_) {
    const double elapsed_s = static_cast<double>(now - last_refill_) / 1e6;
    tokens_ = std::min(policy_.burst_capacity, tokens_ + elapsed_s * policy_.sustained_ops_per_sec);
    last_refill_ = now;
  }
}

bool TokenBucket::try_acquire(double tokens) {
  refill();
  if (tokens_ + 1e-9 < tokens) return false;
  tokens_ = std::max(0.0, tokens_ - tokens);
  return true;
}

double TokenBucket::available() {
  refill();
  return tokens_;
}

KvStore::KvStore(const core::Clock& clock, ThrottlePolicy throttle) {
  if (throttle.enabled) bucket_.emplace(throttle, clock);
}

PutStatus KvStore::put(KvItem item) {
  std::lock_guard lock(mu_);
  if (bucket_ && !bucket_->try_acquire()) {
    ++throttled_;
    return PutStatus::throttled;
  }
  auto& partition = shuffle_[item.hash_key];
  if (auto it = partition.items.find(item.sort_key); it != partition.items.end()) {
    partition.lsi.erase({it->second.lsi_sort_key, it->first});
  }
  partition.lsi.emplace(item.lsi_sort_key, item.sort_key);
  const std::string sort_key = item.sort_key;
  partition.items.insert_or_assign(sort_key, std::move(item));
  return PutStatus::ack;
}

std::optional<KvItem> KvStore::get(std::string_view hash_key, std::string_view sort_key) const {
  std::lock_guard lock(mu_);
  const auto p = shuffle_.find(hash_key);
  if (p == shuffle_.end()) return std::nullopt;
  const auto it = p->second.items.find(sort_key);
  if (it == p->second.items.end()) return std::nullopt;
  return it->second;
}

bool KvStore::erase(std::string_view hash_key, std::string_view sort_key) {
  std::lock_guard lock(mu_);
  const auto p = shuffle_.find(hash_key);
  if (p == shuffle_.end()) return false;
  const auto it = p->second.items.find(sort_key);
  if (it == p->second.items.end()) return false;
  p->second.lsi.erase({it->second.lsi_sort_key, it->first});
  p->second.items.erase(it);
  return true;
}

std::vector<ShuffleEntry> KvStore::query_lsi(std::string_view hash_key, std::string_view lsi_sort_key) const {
  std::lock_guard lock(mu_);
  std::vector<ShuffleEntry> out;
  const auto p = shuffle_.find(hash_key);
  if (p == shuffle_.end()) return out;
  const std::string lsi(lsi_sort_key);
  for (auto it = p->second.lsi.lower_bound(std::make_pair(lsi, std::string()));
       it != p->second.lsi.end() && it->first == lsi; ++it) {
    out.push_back(p->second.items.find(it->second)->second.payload);
  }
  return out;
}

std::vector<KvItem> KvStore::scan(std::string_view hash_key) const {
  std::lock_guard lock(mu_);
  std::vector<KvItem> out;
  const auto p = shuffle_.find(hash_key);
  if (p == shuffle_.end()) return out;
  out.reserve(p->second.items.size());
  for (const auto& [sort_key, item] : p->second.items) out.push_back(item);
  return out;
}

std::vector<std::string> KvStore::distinct_lsi_keys(std::string_view hash_key) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  const auto p = shuffle_.find(hash_key);
  if (p == shuffle_.end()) return out;
  for (const auto& [lsi, sort_key] : p->second.lsi) {
    if (out.empty() || out.back() != lsi) out.push_back(lsi);
  }
  return out;
}

std::size_t KvStore::item_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [hash, partition] : shuffle_) n += partition.items.size();
  return n;
}

std::size_t KvStore::item_count(std::string_view hash_key) const {
  std::lock_guard lock(mu_);
  const auto p = shuffle_.find(hash_key);
  return p == shuffle_.end() ? 0 : p->second.items.size();
}

std::uint64_t KvStore::throttled_writes() const {
  std::lock_guard lock(mu_);
  return throttled_;
}

std::int64_t KvStore::counter_add(const core::ExecutionId& id, core::CounterField field, std::int64_t delta) {
  if (delta < 1) throw InvalidArgument("counter delta must be positive");
  std::lock_guard lock(mu_);
  auto& slot = counters_[id.str()];
  auto& value = field == core::CounterField::ingested ? slot.first : slot.second;
  value += delta;
  return value;
}

core::JobCounters KvStore::counters(const core::ExecutionId& id) const {
  std::lock_guard lock(mu_);
  core::JobCounters out{id, 0, 0};
  if (const auto it = counters_.find(id.str()); it != counters_.end()) {
    out.ingested = it->second.first;
    out.mapped = it->second.second;
  }
  return out;
}

void KvStore::put_result(ResultRow row) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(row.execution_id, row.carrier);
  results_.insert_or_assign(std::move(key), std::move(row));
}

std::vector<ResultRow> KvStore::results(std::string_view execution_id) const {
  std::lock_guard lock(mu_);
  std::vector<ResultRow> out;
  const std::string eid(execution_id);
  for (auto it = results_.lower_bound({eid, std::string()}); it != results_.end() && it->first.first == eid; ++it) {
    out.push_back(it->second);
  }
  return out;
}

void KvStore::put_ranking(const core::ExecutionId& id, core::RankingResult ranking) {
  std::lock_guard lock(mu_);
  rankings_.insert_or_assign(id.str(), std::move(ranking));
}

std::optional<core::RankingResult> KvStore::ranking(const core::ExecutionId& id) const {
  std::lock_guard lock(mu_);
  if (const auto it = rankings_.find(id.str()); it != rankings_.end()) return it->second;
  return std::nullopt;
}

}  // namespace microreduce::storage
