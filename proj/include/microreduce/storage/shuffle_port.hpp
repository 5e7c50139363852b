#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "microreduce/core/execution_id.hpp"
#include "microreduce/storage/io.hpp"
#include "microreduce/storage/kv_store.hpp"
#include "microreduce/storage/object_store.hpp"
#include "microreduce/storage/shuffle_entry.hpp"

namespace microreduce::storage {

enum class ShuffleBackend { object, kv };

std::string_view to_string(ShuffleBackend backend);
/// Accepts "object"/"s3" and "kv"/"dynamodb" (case-insensitive).
ShuffleBackend parse_shuffle_backend(std::string_view text);

/// Storage-agnostic shuffle interface used by the map and reduce functions.
/// Every call records the backend operations it issued into `meter`.
class ShufflePort {
 public:
  virtual ~ShufflePort() = default;

  virtual ShuffleBackend backend() const = 0;
  /// Throws ThrottledError or StorageFaultError; the store is unchanged on failure.
  virtual void write_entry(const ShuffleEntry& entry, IoMeter& meter) = 0;
  virtual std::vector<ShuffleEntry> read_partition(const core::ExecutionId& execution_id,
                                                   std::string_view partition_key, IoMeter& meter) = 0;
  /// Sorted, distinct partition keys written under the execution.
  virtual std::vector<std::string> list_partitions(const core::ExecutionId& execution_id, IoMeter& meter) = 0;
  /// Removes an entry written by a failed attempt. Not subject to throttling or faults.
  virtual void remove_entry(const core::ExecutionId& execution_id, std::string_view partition_key,
                            std::string_view instance_id, IoMeter& meter) = 0;
};

/// Entries as JSON objects under "{execution_id}/{partition_key}/{instance_id}.json".
class ObjectShuffleAdapter final : public ShufflePort {
 public:
  explicit ObjectShuffleAdapter(ObjectStore& store) : store_(store) {}

  ShuffleBackend backend() const override { return ShuffleBackend::object; }
  void write_entry(const ShuffleEntry& entry, IoMeter& meter) override;
  std::vector<ShuffleEntry> read_partition(const core::ExecutionId& execution_id, std::string_view partition_key,
                                           IoMeter& meter) override;
  std::vector<std::string> list_partitions(const core::ExecutionId& execution_id, IoMeter& meter) override;
  void remove_entry(const core::ExecutionId& execution_id, std::string_view partition_key,
                    std::string_view instance_id, IoMeter& meter) override;

 private:
  ObjectStore& store_;
};

/// Bytes returned by one page of a key-value query or scan.
inline constexpr std::size_t kKvPageBytes = 1024 * 1024;

/// Entries as shuffle-table items: hash key = execution id, sort key =
/// "{instance_id}#{partition_key}", LSI sort key = partition key.
class KvShuffleAdapter final : public ShufflePort {
 public:
  explicit KvShuffleAdapter(KvStore& store) : store_(store) {}

  static std::string sort_key_for(std::string_view instance_id, std::string_view partition_key);

  ShuffleBackend backend() const override { return ShuffleBackend::kv; }
  void write_entry(const ShuffleEntry& entry, IoMeter& meter) override;
  std::vector<ShuffleEntry> read_partition(const core::ExecutionId& execution_id, std::string_view partition_key,
                                           IoMeter& meter) override;
  std::vector<std::string> list_partitions(const core::ExecutionId& execution_id, IoMeter& meter) override;
  void remove_entry(const core::ExecutionId& execution_id, std::string_view partition_key,
                    std::string_view instance_id, IoMeter& meter) override;

 private:
  KvStore& store_;
};

std::unique_ptr<ShufflePort> make_shuffle_port(ShuffleBackend backend, ObjectStore& objects, KvStore& kv);

}  // namespace microreduce::storage
