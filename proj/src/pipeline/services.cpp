#include "microreduce/pipeline/services.hpp"

#include <algorithm>

namespace microreduce::pipeline {

std::string_view to_string(AuditKind kind) {
  switch (kind) {
    case AuditKind::ingest_counter_write: return "ingest_counter_write";
    case AuditKind::map_counter_write: return "map_counter_write";
    case AuditKind::gate_check: return "gate_check";
    case AuditKind::gate_pass: return "gate_pass";
    case AuditKind::aggregate_read: return "aggregate_read";
  }
  return "unknown";
}

void AuditLog::record(AuditKind kind, const core::ExecutionId& execution_id, std::string detail) {
  events_.push_back({clock_.now(), kind, execution_id.str(), std::move(detail)});
}

bool gate_ordering_holds(const AuditLog& log, const core::ExecutionId& execution_id) {
  const auto& ev = log.events();
  std::optional<std::size_t> last_write;
  std::optional<std::size_t> first_read;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].execution_id != execution_id.str()) continue;
    if (ev[i].kind == AuditKind::map_counter_write) last_write = i;
    if (ev[i].kind == AuditKind::aggregate_read && !first_read) first_read = i;
  }
  return !last_write || !first_read || *last_write < *first_read;
}

Services::Services(const core::Clock& clock, ServicesConfig config)
    : raw("raw"),
      shuffle("shuffle", config.shuffle_faults),
      kv(clock, config.throttle),
      queue(clock, config.queue, "microbatches"),
      port(storage::make_shuffle_port(config.backend, shuffle, kv)),
      audit(clock),
      config_(config) {}

}  // namespace microreduce::pipeline
