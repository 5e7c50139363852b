#include "microreduce/storage/shuffle_port.hpp"

#include <algorithm>
#include <cctype>

#include "microreduce/core/errors.hpp"
#include "microreduce/storage/errors.hpp"

namespace microreduce::storage {

namespace {

// Typical serialized size of a shuffle-table item, used to page scans.
constexpr std::size_t kApproxItemBytes = 200;

std::size_t pages_for(std::size_t bytes) { return std::max<std::size_t>(1, (bytes + kKvPageBytes - 1) / kKvPageBytes); }

}  // namespace

std::string_view to_string(ShuffleBackend backend) { return backend == ShuffleBackend::object ? "object" : "kv"; }

ShuffleBackend parse_shuffle_backend(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "object" || lower == "s3") return ShuffleBackend::object;
  if (lower == "kv" || lower == "dynamodb") return ShuffleBackend::kv;
  throw InvalidArgument("unknown shuffle backend '" + std::string(text) + "' (expected object|kv)");
}

void ObjectShuffleAdapter::write_entry(const ShuffleEntry& entry, IoMeter& meter) {
  const auto key = ObjectKey::make(entry.execution_id, entry.partition_key, entry.instance_id);
  std::string body = to_json(entry);
  meter.record(IoKind::object_put, body.size());
  store_.put(key, std::move(body));
}

std::vector<ShuffleEntry> ObjectShuffleAdapter::read_partition(const core::ExecutionId& execution_id,
                                                               std::string_view partition_key, IoMeter& meter) {
  const auto prefix = ObjectKey::partition_prefix(execution_id, partition_key);
  std::vector<ShuffleEntry> entries;
  std::optional<std::string> cursor;
  do {
    auto page = store_.list_page(prefix, cursor);
    meter.record(IoKind::object_list);
    for (const auto& key : page.keys) {
      auto body = store_.get(key);
      if (!body) continue;  // deleted between list and get
      meter.record(IoKind::object_get, body->size());
      entries.push_back(shuffle_entry_from_json(*body));
    }
    cursor = std::move(page.next_start_after);
  } while (cursor);
  return entries;
}

std::vector<std::string> ObjectShuffleAdapter::list_partitions(const core::ExecutionId& execution_id, IoMeter& meter) {
  const auto prefix = ObjectKey::execution_prefix(execution_id);
  auto prefixes = store_.common_prefixes(prefix, '/');
  const std::size_t pages = std::max<std::size_t>(1, (prefixes.size() + kListPageSize - 1) / kListPageSize);
  for (std::size_t i = 0; i < pages; ++i) meter.record(IoKind::object_list);
  std::vector<std::string> out;
  out.reserve(prefixes.size());
  for (const auto& p : prefixes) out.push_back(p.substr(prefix.size(), p.size() - prefix.size() - 1));
  return out;
}

void ObjectShuffleAdapter::remove_entry(const core::ExecutionId& execution_id, std::string_view partition_key,
                                        std::string_view instance_id, IoMeter& meter) {
  meter.record(IoKind::object_delete);
  store_.erase(ObjectKey::make(execution_id, partition_key, instance_id).str());
}

std::string KvShuffleAdapter::sort_key_for(std::string_view instance_id, std::string_view partition_key) {
  std::string key(instance_id);
  key.push_back('#');
  key.append(partition_key);
  return key;
}

void KvShuffleAdapter::write_entry(const ShuffleEntry& entry, IoMeter& meter) {
  const std::size_t bytes = to_json(entry).size();
  meter.record(IoKind::kv_put, bytes);
  KvItem item{entry.execution_id.str(), sort_key_for(entry.instance_id, entry.partition_key), entry.partition_key,
              entry};
  if (store_.put(std::move(item)) == PutStatus::throttled) {
    throw ThrottledError("shuffle write throttled for " + entry.partition_key + " by " + entry.instance_id);
  }
}

std::vector<ShuffleEntry> KvShuffleAdapter::read_partition(const core::ExecutionId& execution_id,
                                                           std::string_view partition_key, IoMeter& meter) {
  auto entries = store_.query_lsi(execution_id.str(), partition_key);
  std::size_t page_bytes = 0;
  for (const auto& entry : entries) {
    const std::size_t bytes = to_json(entry).size();
    if (page_bytes + bytes > kKvPageBytes) {
      meter.record(IoKind::kv_query, page_bytes);
      page_bytes = 0;
    }
    page_bytes += bytes;
  }
  meter.record(IoKind::kv_query, page_bytes);
  return entries;
}

std::vector<std::string> KvShuffleAdapter::list_partitions(const core::ExecutionId& execution_id, IoMeter& meter) {
  const auto items = store_.item_count(execution_id.str());
  const std::size_t pages = pages_for(items * kApproxItemBytes);
  for (std::size_t i = 0; i < pages; ++i) meter.record(IoKind::kv_query, std::min(kKvPageBytes, items * kApproxItemBytes));
  return store_.distinct_lsi_keys(execution_id.str());
}

void KvShuffleAdapter::remove_entry(const core::ExecutionId& execution_id, std::string_view partition_key,
                                    std::string_view instance_id, IoMeter& meter) {
  meter.record(IoKind::kv_delete);
  store_.erase(execution_id.str(), sort_key_for(instance_id, partition_key));
}

std::unique_ptr<ShufflePort> make_shuffle_port(ShuffleBackend backend, ObjectStore& objects, KvStore& kv) {
  if (backend == ShuffleBackend::object) return std::make_unique<ObjectShuffleAdapter>(objects);
  return std::make_unique<KvShuffleAdapter>(kv);
}

}  // namespace microreduce::storage
