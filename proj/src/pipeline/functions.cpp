#include "microreduce/pipeline/functions.hpp"

#include <algorithm>
#include <map>

#include "microreduce/core/query.hpp"
#include "microreduce/core/serialize.hpp"
#include "microreduce/data/csv.hpp"
#include "microreduce/storage/errors.hpp"

namespace microreduce::pipeline {

using storage::IoKind;

namespace {

constexpr double kBytesPerMb = 1024.0 * 1024.0;

// Sends batches lane, lane + lanes, ... evenly spaced over elapsed_ms.
sim::Task<void> send_lane(runtime::InvocationContext& ctx, storage::MessageQueue& queue,
                          const std::vector<core::MicroBatch>& batches, std::size_t lane, std::size_t lanes,
                          double elapsed_ms) {
  const std::size_t mine = (batches.size() - lane + lanes - 1) / lanes;
  const double interval = mine == 0 ? 0.0 : elapsed_ms / static_cast<double>(mine);
  for (std::size_t i = lane; i < batches.size(); i += lanes) {
    co_await ctx.spend(interval);
    std::string body = core::encode_micro_batch(batches[i]);
    const std::size_t bytes = body.size();
    queue.send(std::move(body));
    co_await ctx.io(IoKind::queue_send, bytes);
  }
}

sim::Task<void> tombstone(runtime::InvocationContext& ctx, Services& services, const core::ExecutionId& eid,
                          const std::vector<std::string>& written, const std::string& attempt_id) {
  storage::IoMeter meter;
  for (const auto& key : written) services.port->remove_entry(eid, key, attempt_id, meter);
  co_await ctx.io(meter);
}

}  // namespace

sim::Task<void> ingest_fn(runtime::InvocationContext& ctx, Services& services, IngestEvent event,
                          IngestOptions options, IngestResult& result) {
  const std::size_t batch_size = options.batch_size;
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (event.bucket != services.raw.bucket()) throw storage::NotFoundError("unknown bucket " + event.bucket);
  const auto body = services.raw.get_shared(event.object_key);
  if (!body) throw storage::NotFoundError("no object " + event.object_key);
  co_await ctx.io(IoKind::object_get, body->size());
  ctx.note_memory_mb(static_cast<double>(body->size()) / kBytesPerMb * ctx.calibration().ingest_input_factor);

  data::ParseOptions parse;
  parse.keep_invalid = false;
  parse.keep_passthrough = options.retain_source_fields;
  std::vector<core::MicroBatch> batches;
  data::ParseStats stats;
  data::for_each_record(
      *body, parse,
      [&](core::FlightRecord&& record) {
        if (batches.empty() || batches.back().records.size() == batch_size) {
          batches.push_back({event.execution_id, batches.size(), event.object_key, {}});
          batches.back().records.reserve(batch_size);
        }
        batches.back().records.push_back(std::move(record));
      },
      stats);
  const data::ParseResult parsed{{}, stats};

  // Parse cost covers every row read; sends are spread evenly over it.
  const double elapsed = ctx.work_ms(static_cast<double>(parsed.stats.total_rows), ctx.calibration().ingest_rows_per_ms);
  const std::size_t lanes = std::min<std::size_t>(static_cast<std::size_t>(ctx.function().workers),
                                                  std::max<std::size_t>(1, batches.size()));
  if (batches.empty()) {
    co_await ctx.spend(elapsed);
  } else {
    std::vector<sim::Task<void>> tasks;
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      tasks.push_back(send_lane(ctx, services.queue, batches, lane, lanes, elapsed));
    }
    co_await sim::when_all(ctx.scheduler(), std::move(tasks));
  }

  result.batches_emitted = batches.size();
  result.records_emitted = parsed.stats.valid_rows;
  result.invalid_rows = parsed.stats.invalid_rows;
  if (result.records_emitted > 0) {
    services.kv.counter_add(event.execution_id, core::CounterField::ingested,
                            static_cast<std::int64_t>(result.records_emitted));
    services.audit.record(AuditKind::ingest_counter_write, event.execution_id,
                          std::to_string(result.records_emitted));
    co_await ctx.io(IoKind::counter_update);
  }
}

sim::Task<void> map_fn(runtime::InvocationContext& ctx, Services& services, const storage::QueueMessage& message,
                       MapOptions options, MapResult& result) {
  const core::MicroBatch batch = core::decode_micro_batch(message.body);
  const core::ExecutionId& eid = batch.execution_id;
  ctx.note_memory_mb(static_cast<double>(message.body.size()) / kBytesPerMb * 4.0);
  co_await ctx.work(static_cast<double>(batch.records.size()), ctx.calibration().map_rows_per_ms);

  std::map<std::string, std::vector<core::FlightRecord>> rows_by_carrier;
  std::map<std::string, core::CarrierAggregate> groups;
  std::int64_t rows = 0;
  for (const auto& record : batch.records) {
    if (!core::passes_query_filter(record)) continue;
    auto [it, inserted] = groups.try_emplace(record.carrier, core::CarrierAggregate{record.carrier, 0, 0});
    it->second.delay_sum += record.arr_delay_min;
    it->second.count += 1;
    if (options.retain_rows) rows_by_carrier[record.carrier].push_back(record);
    ++rows;
  }

  const std::string attempt_id = ctx.next_attempt_id();
  std::vector<std::string> written;
  for (const auto& [carrier, agg] : groups) {
    storage::ShuffleEntry entry{eid, carrier, attempt_id, agg.delay_sum, agg.count, std::nullopt};
    if (options.retain_rows) entry.rows = rows_by_carrier[carrier];
    bool ok = false;
    std::string failure;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
      storage::IoMeter meter;
      try {
        services.port->write_entry(entry, meter);
        ok = true;
      } catch (const storage::ThrottledError& e) {
        failure = e.what();
      } catch (const storage::StorageFaultError& e) {
        failure = e.what();
      }
      co_await ctx.io(meter);
      if (!ok && attempt == 0) co_await ctx.spend(options.throttle_backoff_ms);
    }
    if (!ok) {
      co_await tombstone(ctx, services, eid, written, attempt_id);
      throw MapWriteError("shuffle write for " + carrier + " failed after retry: " + failure);
    }
    written.push_back(carrier);
  }

  if (options.failure_rate > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(ctx.rng()) < options.failure_rate) {
      co_await tombstone(ctx, services, eid, written, attempt_id);
      throw InjectedMapFailure("injected map failure for batch " + std::to_string(batch.seq) + " of " +
                               batch.source_file);
    }
  }

  if (rows > 0) {
    services.kv.counter_add(eid, core::CounterField::mapped, rows);
    services.audit.record(AuditKind::map_counter_write, eid, std::to_string(rows));
    co_await ctx.io(IoKind::counter_update);
  }
  result.entries_written += written.size();
  result.rows_processed += static_cast<std::size_t>(rows);
}

sim::Task<void> reduce_prep_fn(runtime::InvocationContext& ctx, Services& services, core::ExecutionId execution_id,
                               std::vector<std::string>& partitions) {
  storage::IoMeter meter;
  partitions = services.port->list_partitions(execution_id, meter);
  co_await ctx.io(meter);
}

sim::Task<GateState> reduce_gate(sim::Scheduler& scheduler, Services& services, const runtime::Calibration& calibration,
                                 core::ExecutionId execution_id, GateOptions options) {
  if (options.max_attempts < 1) throw InvalidArgument("gate max_attempts must be positive");
  GateState state;
  state.execution_id = execution_id;
  while (true) {
    const core::JobCounters counters = services.kv.counters(execution_id);
    co_await scheduler.sleep_for_ms(calibration.latency.cost_ms(IoKind::counter_read));
    ++state.attempts;
    state.ingested = counters.ingested;
    state.mapped = counters.mapped;
    services.audit.record(AuditKind::gate_check, execution_id,
                          std::to_string(counters.ingested) + "/" + std::to_string(counters.mapped));
    if (gate_condition(counters.ingested, counters.mapped)) {
      state.passed = true;
      break;
    }
    if (state.attempts >= options.max_attempts) {
      if (options.override_on_stall) {
        state.passed = true;
        state.overridden = true;
      }
      break;
    }
    co_await scheduler.sleep_for_ms(options.poll_interval_ms);
  }
  if (state.passed) services.audit.record(AuditKind::gate_pass, execution_id, state.overridden ? "override" : "");
  co_return state;
}

sim::Task<void> reduce_aggregate_fn(runtime::InvocationContext& ctx, Services& services, core::ExecutionId execution_id,
                                    std::string partition_key, AggregateResult& result) {
  storage::IoMeter meter;
  services.audit.record(AuditKind::aggregate_read, execution_id, partition_key);
  const auto entries = services.port->read_partition(execution_id, partition_key, meter);
  co_await ctx.io(meter);
  ctx.note_memory_mb(static_cast<double>(entries.size()) * 200.0 / kBytesPerMb);
  co_await ctx.work(static_cast<double>(entries.size()), ctx.calibration().reduce_entries_per_ms);

  result.entries_read = entries.size();
  result.aggregate = core::CarrierAggregate{partition_key, 0, 0};
  for (const auto& e : entries) {
    core::merge_into(result.aggregate, core::CarrierAggregate{e.partition_key, e.delay_sum, e.count});
  }
  if (result.aggregate.count < 1) {
    result.degenerate = true;
    co_return;
  }
  services.kv.put_result(
      {execution_id.str(), partition_key, result.aggregate.delay_sum, result.aggregate.count});
  co_await ctx.io(IoKind::results_write);
}

sim::Task<void> reduce_rank_fn(runtime::InvocationContext& ctx, Services& services, core::ExecutionId execution_id,
                               std::size_t limit, core::RankingResult& result) {
  const auto rows = services.kv.results(execution_id.str());
  co_await ctx.io(IoKind::results_read);
  co_await ctx.work(static_cast<double>(rows.size()), ctx.calibration().rank_aggregates_per_ms);
  std::vector<core::CarrierAggregate> aggs;
  aggs.reserve(rows.size());
  for (const auto& r : rows) aggs.push_back({r.carrier, r.delay_sum, r.count});
  result = core::rank_carriers(std::move(aggs), limit);
  services.kv.put_ranking(execution_id, result);
  co_await ctx.io(IoKind::results_write);
}

std::int64_t dead_lettered_rows(const storage::MessageQueue& queue, const core::ExecutionId& execution_id) {
  std::int64_t rows = 0;
  for (const auto& m : queue.dead_letters()) {
    const auto batch = core::decode_micro_batch(m.body);
    if (batch.execution_id != execution_id) continue;
    for (const auto& r : batch.records) rows += core::passes_query_filter(r) ? 1 : 0;
  }
  return rows;
}

}  // namespace microreduce::pipeline
