#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "microreduce/core/execution_id.hpp"
#include "microreduce/core/records.hpp"
#include "microreduce/pipeline/services.hpp"
#include "microreduce/runtime/runtime.hpp"
#include "microreduce/sim/scheduler.hpp"
#include "microreduce/storage/queue.hpp"

namespace microreduce::pipeline {

class MapWriteError : public Error {
 public:
  using Error::Error;
};

class InjectedMapFailure : public Error {
 public:
  using Error::Error;
};

struct IngestEvent {
  core::ExecutionId execution_id;
  std::string bucket;
  std::string object_key;
};

struct IngestOptions {
  std::size_t batch_size = core::kDefaultBatchSize;
  /// Carry the passthrough CSV columns in every micro-batch.
  bool retain_source_fields = false;
};

struct IngestResult {
  std::size_t batches_emitted = 0;
  std::size_t records_emitted = 0;
  std::size_t invalid_rows = 0;
};

/// Downloads and parses one raw file, sends its valid rows as micro-batches
/// over `workers` lanes, then adds the record count to the ingested counter.
sim::Task<void> ingest_fn(runtime::InvocationContext& ctx, Services& services, IngestEvent event,
                          IngestOptions options, IngestResult& result);

struct MapOptions {
  /// Probability that an attempt fails after its shuffle writes and before
  /// its counter update.
  double failure_rate = 0.0;
  double throttle_backoff_ms = 50.0;
  bool retain_rows = false;
};

struct MapResult {
  std::size_t entries_written = 0;
  std::size_t rows_processed = 0;
};

/// Groups one micro-batch by carrier and writes one shuffle entry per
/// carrier, then adds the row count to the mapped counter. A write that is
/// still rejected after one retry, or an injected failure, removes the
/// attempt's entries and throws.
sim::Task<void> map_fn(runtime::InvocationContext& ctx, Services& services, const storage::QueueMessage& message,
                       MapOptions options, MapResult& result);

/// Partition discovery ahead of the gate.
sim::Task<void> reduce_prep_fn(runtime::InvocationContext& ctx, Services& services, core::ExecutionId execution_id,
                               std::vector<std::string>& partitions);

struct GateOptions {
  double poll_interval_ms = 1000.0;
  int max_attempts = 300;
  bool override_on_stall = false;
};

struct GateState {
  std::optional<core::ExecutionId> execution_id;
  std::int64_t ingested = 0;
  std::int64_t mapped = 0;
  int attempts = 0;
  bool overridden = false;
  bool passed = false;
};

/// True iff the counters admit the reduce phase without an override.
inline bool gate_condition(std::int64_t ingested, std::int64_t mapped) { return ingested == mapped && ingested > 0; }

/// Polls the job counters until they are equal and non-zero, sleeping
/// poll_interval_ms between checks. After max_attempts failed checks the
/// gate is stalled, or overridden when override_on_stall is set.
sim::Task<GateState> reduce_gate(sim::Scheduler& scheduler, Services& services, const runtime::Calibration& calibration,
                                 core::ExecutionId execution_id, GateOptions options);

struct AggregateResult {
  core::CarrierAggregate aggregate;
  std::size_t entries_read = 0;
  /// The partition had no entries; nothing was written.
  bool degenerate = false;
};

/// Reads and merges every shuffle entry of one partition and stores the aggregate.
sim::Task<void> reduce_aggregate_fn(runtime::InvocationContext& ctx, Services& services, core::ExecutionId execution_id,
                                    std::string partition_key, AggregateResult& result);

/// Ranks every stored aggregate of the execution and persists the result.
sim::Task<void> reduce_rank_fn(runtime::InvocationContext& ctx, Services& services, core::ExecutionId execution_id,
                               std::size_t limit, core::RankingResult& result);

/// Rows carried by the messages in the dead-letter queue for `execution_id`.
std::int64_t dead_lettered_rows(const storage::MessageQueue& queue, const core::ExecutionId& execution_id);

}  // namespace microreduce::pipeline
