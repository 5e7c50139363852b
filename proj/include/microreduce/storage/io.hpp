#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace microreduce::storage {

/// Every backend operation whose latency is charged on the virtual clock.
enum class IoKind {
  object_get,
  object_put,
  object_list,
  object_delete,
  kv_put,
  kv_query,
  kv_delete,
  counter_update,
  counter_read,
  queue_send,
  queue_receive,
  queue_delete,
  results_write,
  results_read,
};

inline constexpr std::size_t kIoKindCount = 14;

std::string_view to_string(IoKind kind);

struct IoOp {
  IoKind kind;
  std::size_t bytes = 0;
};

/// Records the backend operations a composite call performed, so the caller
/// can charge their latency afterwards.
class IoMeter {
 public:
  void record(IoKind kind, std::size_t bytes = 0) { ops_.push_back({kind, bytes}); }
  const std::vector<IoOp>& ops() const { return ops_; }
  std::size_t count(IoKind kind) const;
  void clear() { ops_.clear(); }

 private:
  std::vector<IoOp> ops_;
};

}  // namespace microreduce::storage
