#include "microreduce/storage/object_store.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "microreduce/core/errors.hpp"
#include "microreduce/storage/errors.hpp"

namespace microreduce::storage {

namespace {

constexpr std::string_view kJsonSuffix = ".json";

bool valid_partition_key(std::string_view key) {
  return !key.empty() && key.find('/') == std::string_view::npos;
}

}  // namespace

ObjectKey ObjectKey::make(const core::ExecutionId& execution_id, std::string_view partition_key,
                          std::string_view instance_id) {
  if (!valid_partition_key(partition_key)) {
    throw InvalidArgument("partition key must be non-empty and contain no '/': '" + std::string(partition_key) + "'");
  }
  if (!core::is_uuid(instance_id)) throw InvalidArgument("instance id is not a UUID: '" + std::string(instance_id) + "'");
  std::string key;
  key.reserve(execution_id.str().size() + partition_key.size() + instance_id.size() + 7);
  key.append(execution_id.str()).append("/").append(partition_key).append("/").append(instance_id).append(kJsonSuffix);
  return ObjectKey(std::move(key));
}

ObjectKey ObjectKey::parse(std::string_view text) {
  const auto first = text.find('/');
  const auto second = first == std::string_view::npos ? first : text.find('/', first + 1);
  if (second == std::string_view::npos || text.find('/', second + 1) != std::string_view::npos ||
      !text.ends_with(kJsonSuffix)) {
    throw InvalidArgument("malformed object key: '" + std::string(text) + "'");
  }
  const auto eid = text.substr(0, first);
  const auto partition = text.substr(first + 1, second - first - 1);
  const auto instance = text.substr(second + 1, text.size() - second - 1 - kJsonSuffix.size());
  return make(core::ExecutionId::parse(eid), partition, instance);
}

std::string_view ObjectKey::execution_id() const { return std::string_view(key_).substr(0, key_.find('/')); }

std::string_view ObjectKey::partition_key() const {
  const auto first = key_.find('/');
  const auto second = key_.find('/', first + 1);
  return std::string_view(key_).substr(first + 1, second - first - 1);
}

std::string_view ObjectKey::instance_id() const {
  const auto second = key_.find('/', key_.find('/') + 1);
  return std::string_view(key_).substr(second + 1, key_.size() - second - 1 - kJsonSuffix.size());
}

std::string ObjectKey::execution_prefix(const core::ExecutionId& execution_id) { return execution_id.str() + "/"; }

std::string ObjectKey::partition_prefix(const core::ExecutionId& execution_id, std::string_view partition_key) {
  return execution_id.str() + "/" + std::string(partition_key) + "/";
}

ObjectStore::ObjectStore(std::string bucket, FaultPolicy faults) : bucket_(std::move(bucket)), faults_(faults) {}

void ObjectStore::put(const std::string& key, std::string body) {
  if (faults_.should_fail()) throw StorageFaultError("injected fault on put " + bucket_ + "/" + key);
  std::lock_guard lock(mu_);
  objects_.insert_or_assign(key, std::make_shared<const std::string>(std::move(body)));
}

std::optional<std::string> ObjectStore::get(const std::string& key) const {
  auto body = get_shared(key);
  if (!body) return std::nullopt;
  return *body;
}

std::shared_ptr<const std::string> ObjectStore::get_shared(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = objects_.find(key);
  if (it == objects_.end()) return nullptr;
  return it->second;
}

std::optional<std::size_t> ObjectStore::size_of(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = objects_.find(key);
  if (it == objects_.end()) return std::nullopt;
  return it->second->size();
}

bool ObjectStore::erase(const std::string& key) {
  std::lock_guard lock(mu_);
  return objects_.erase(key) > 0;
}

std::vector<std::string> ObjectStore::list(std::string_view prefix) const {
  std::vector<std::string> keys;
  std::optional<std::string> cursor;
  do {
    auto page = list_page(prefix, cursor);
    keys.insert(keys.end(), std::make_move_iterator(page.keys.begin()), std::make_move_iterator(page.keys.end()));
    cursor = std::move(page.next_start_after);
  } while (cursor);
  return keys;
}

std::vector<std::string> ObjectStore::common_prefixes(std::string_view prefix, char delimiter) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  auto it = objects_.lower_bound(prefix);
  while (it != objects_.end() && it->first.starts_with(prefix)) {
    const auto cut = it->first.find(delimiter, prefix.size());
    if (cut == std::string::npos) {
      ++it;
      continue;
    }
    std::string common = it->first.substr(0, cut + 1);
    // Skip every key sharing this prefix: the next candidate sorts after "<common minus delimiter><delimiter + 1>".
    std::string bound = common;
    bound.back() = static_cast<char>(delimiter + 1);
    out.push_back(std::move(common));
    it = objects_.lower_bound(bound);
  }
  return out;
}

ListPage ObjectStore::list_page(std::string_view prefix, const std::optional<std::string>& start_after,
                                std::size_t max_keys) const {
  if (max_keys == 0) throw InvalidArgument("max_keys must be positive");
  std::lock_guard lock(mu_);
  ListPage page;
  auto it = start_after ? objects_.upper_bound(*start_after) : objects_.lower_bound(prefix);
  if (it != objects_.end() && it->first < prefix) it = objects_.lower_bound(prefix);
  for (; it != objects_.end() && it->first.starts_with(prefix); ++it) {
    if (page.keys.size() == max_keys) {
      page.next_start_after = page.keys.back();
      break;
    }
    page.keys.push_back(it->first);
  }
  return page;
}

std::size_t ObjectStore::object_count() const {
  std::lock_guard lock(mu_);
  return objects_.size();
}

std::size_t ObjectStore::total_bytes() const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& [key, body] : objects_) total += body->size();
  return total;
}

void ObjectStore::persist(const std::filesystem::path& root) const {
  std::lock_guard lock(mu_);
  for (const auto& [key, body] : objects_) {
    const auto path = root / key;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(body->data(), static_cast<std::streamsize>(body->size()));
  }
}

std::size_t ObjectStore::load_directory(const std::filesystem::path& root, std::string_view prefix) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::lock_guard lock(mu_);
    objects_.insert_or_assign(std::string(prefix) + path.filename().string(),
                              std::make_shared<const std::string>(std::move(body)));
  }
  return files.size();
}

}  // namespace microreduce::storage
