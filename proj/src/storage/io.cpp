#include "microreduce/storage/io.hpp"

#include <algorithm>

namespace microreduce::storage {

std::string_view to_string(IoKind kind) {
  switch (kind) {
    case IoKind::object_get: return "object_get";
    case IoKind::object_put: return "object_put";
    case IoKind::object_list: return "object_list";
    case IoKind::object_delete: return "object_delete";
    case IoKind::kv_put: return "kv_put";
    case IoKind::kv_query: return "kv_query";
    case IoKind::kv_delete: return "kv_delete";
    case IoKind::counter_update: return "counter_update";
    case IoKind::counter_read: return "counter_read";
    case IoKind::queue_send: return "queue_send";
    case IoKind::queue_receive: return "queue_receive";
    case IoKind::queue_delete: return "queue_delete";
    case IoKind::results_write: return "results_write";
    case IoKind::results_read: return "results_read";
  }
  return "unknown";
}

std::size_t IoMeter::count(IoKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(ops_.begin(), ops_.end(), [kind](const IoOp& op) { return op.kind == kind; }));
}

}  // namespace microreduce::storage
