#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microreduce/core/execution_id.hpp"
#include "microreduce/storage/fault.hpp"

namespace microreduce::storage {

/// "{execution_id}/{partition_key}/{instance_id}.json"
class ObjectKey {
 public:
  static ObjectKey make(const core::ExecutionId& execution_id, std::string_view partition_key,
                        std::string_view instance_id);
  /// Throws InvalidArgument unless `text` has exactly the shape above.
  static ObjectKey parse(std::string_view text);

  const std::string& str() const { return key_; }
  std::string_view execution_id() const;
  std::string_view partition_key() const;
  std::string_view instance_id() const;

  /// "{execution_id}/" and "{execution_id}/{partition_key}/".
  static std::string execution_prefix(const core::ExecutionId& execution_id);
  static std::string partition_prefix(const core::ExecutionId& execution_id, std::string_view partition_key);

 private:
  explicit ObjectKey(std::string key) : key_(std::move(key)) {}
  std::string key_;
};

struct ListPage {
  std::vector<std::string> keys;
  /// Present when more keys remain; pass back as `start_after`.
  std::optional<std::string> next_start_after;
};

inline constexpr std::size_t kListPageSize = 1000;

/// In-memory bucket with lexicographically ordered keys.
class ObjectStore {
 public:
  explicit ObjectStore(std::string bucket = "bucket", FaultPolicy faults = {});

  const std::string& bucket() const { return bucket_; }

  /// Last writer wins. Throws StorageFaultError when the fault injector fires.
  void put(const std::string& key, std::string body);
  void put(const ObjectKey& key, std::string body) { put(key.str(), std::move(body)); }

  std::optional<std::string> get(const std::string& key) const;
  /// The stored body without copying; null when absent.
  std::shared_ptr<const std::string> get_shared(const std::string& key) const;
  std::optional<std::size_t> size_of(const std::string& key) const;
  bool erase(const std::string& key);

  /// Every key starting with `prefix`, sorted. Paging is internal.
  std::vector<std::string> list(std::string_view prefix) const;
  /// Distinct "<prefix><segment><delimiter>" prefixes, sorted; one listing call with a delimiter.
  std::vector<std::string> common_prefixes(std::string_view prefix, char delimiter = '/') const;
  ListPage list_page(std::string_view prefix, const std::optional<std::string>& start_after,
                     std::size_t max_keys = kListPageSize) const;

  std::size_t object_count() const;
  std::size_t total_bytes() const;

  /// Writes every object to `root/<key>`, creating directories from the '/' separators.
  void persist(const std::filesystem::path& root) const;
  /// Loads every regular file under `root` (non-recursive) as `<prefix><filename>`.
  std::size_t load_directory(const std::filesystem::path& root, std::string_view prefix = "");

 private:
  std::string bucket_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const std::string>, std::less<>> objects_;
  FaultInjector faults_;
};

}  // namespace microreduce::storage
