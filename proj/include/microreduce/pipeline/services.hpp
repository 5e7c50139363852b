#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "microreduce/core/clock.hpp"
#include "microreduce/core/execution_id.hpp"
#include "microreduce/storage/fault.hpp"
#include "microreduce/storage/kv_store.hpp"
#include "microreduce/storage/object_store.hpp"
#include "microreduce/storage/queue.hpp"
#include "microreduce/storage/shuffle_port.hpp"

namespace microreduce::pipeline {

enum class AuditKind { ingest_counter_write, map_counter_write, gate_check, gate_pass, aggregate_read };

std::string_view to_string(AuditKind kind);

struct AuditEvent {
  core::VirtualTime at = 0;
  AuditKind kind = AuditKind::gate_check;
  std::string execution_id;
  std::string detail;
};

/// Append-only log of the operations whose order the reduce gate protects.
class AuditLog {
 public:
  explicit AuditLog(const core::Clock& clock) : clock_(clock) {}

  void record(AuditKind kind, const core::ExecutionId& execution_id, std::string detail = {});
  const std::vector<AuditEvent>& events() const { return events_; }

 private:
  const core::Clock& clock_;
  std::vector<AuditEvent> events_;
};

/// True when, for `execution_id`, every map counter write precedes every
/// aggregate read in log order.
bool gate_ordering_holds(const AuditLog& log, const core::ExecutionId& execution_id);

struct ServicesConfig {
  storage::ShuffleBackend backend = storage::ShuffleBackend::object;
  storage::ThrottlePolicy throttle;
  storage::FaultPolicy shuffle_faults;
  storage::QueuePolicy queue;
};

/// The emulated cloud services one environment's functions talk to.
class Services {
 public:
  Services(const core::Clock& clock, ServicesConfig config);

  const ServicesConfig& config() const { return config_; }

  storage::ObjectStore raw;
  storage::ObjectStore shuffle;
  storage::KvStore kv;
  storage::MessageQueue queue;
  std::unique_ptr<storage::ShufflePort> port;
  AuditLog audit;

 private:
  ServicesConfig config_;
};

}  // namespace microreduce::pipeline
