#include "microreduce/workflow/orchestrator.hpp"

#include <algorithm>
#include <optional>

#include <json.hpp>

#include "microreduce/core/serialize.hpp"
#include "microreduce/runtime/queue_source.hpp"

namespace microreduce::workflow {

namespace {

TraceEvent span_of(const runtime::InvocationRecord& rec, const std::string& state) {
  const core::VirtualTime start = core::ms_to_virtual(rec.start_ms) - rec.init_ms * core::kMicrosPerMs;
  return {start, state, rec.instance_id, std::string(runtime::to_string(rec.outcome)),
          (rec.init_ms + rec.duration_ms) * core::kMicrosPerMs};
}

sim::Task<runtime::InvocationRecord> invoke_with_retry(runtime::Runtime& rt, runtime::FunctionConfig fn,
                                                       std::string execution_id, runtime::Runtime::Handler handler,
                                                       std::string state, ExecutionTrace& trace, int retries,
                                                       double backoff_ms) {
  for (int attempt = 0;; ++attempt) {
    runtime::InvocationRecord rec = co_await rt.invoke(fn, execution_id, handler);
    trace.add(span_of(rec, state));
    if (rec.outcome == runtime::Outcome::ok || attempt >= retries) co_return rec;
    co_await rt.scheduler().sleep_for_ms(backoff_ms);
  }
}

std::string describe_failure(const runtime::InvocationRecord& rec) {
  return rec.function + " " + std::string(runtime::to_string(rec.outcome)) + (rec.error.empty() ? "" : ": " + rec.error);
}

sim::Task<void> drive(Environment& env, std::vector<std::string> files, WorkflowDefinition definition,
                      std::optional<JobResult>& out) {
  out.emplace(co_await env.execute(std::move(files), std::move(definition)));
}

}  // namespace

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::succeeded: return "succeeded";
    case JobStatus::failed: return "failed";
    case JobStatus::stalled: return "stalled";
  }
  return "failed";
}

Environment::Environment(ScenarioConfig scenario, runtime::Calibration calibration)
    : scenario_(std::move(scenario)), ids_(scenario_.seed) {
  scenario_.validate();
  scheduler_ = std::make_unique<sim::Scheduler>(scenario_.interleave_seed);
  pipeline::ServicesConfig services{scenario_.shuffle, scenario_.throttle,
                                    storage::FaultPolicy{scenario_.shuffle_fault_rate, scenario_.seed + 17},
                                    scenario_.queue};
  services_ = std::make_unique<pipeline::Services>(*scheduler_, services);
  runtime_ = std::make_unique<runtime::Runtime>(*scheduler_, std::move(calibration), scenario_.limits, scenario_.seed);
}

JobResult Environment::run_job(const std::vector<std::string>& files, const WorkflowDefinition& definition) {
  std::optional<JobResult> out;
  scheduler_->spawn(drive(*this, files, definition, out));
  scheduler_->run();
  if (!out) throw Error("job did not complete");
  return std::move(*out);
}

sim::Task<JobResult> Environment::execute(std::vector<std::string> files, WorkflowDefinition definition) {
  definition.validate();
  if (files.empty()) throw InvalidArgument("run_job: no input files");
  auto& sched = *scheduler_;
  auto& svc = *services_;
  auto& rt = *runtime_;
  const auto& cal = rt.calibration();
  const ScenarioConfig sc = scenario_;

  JobResult result{ids_.new_execution_id()};
  const core::ExecutionId eid = result.execution_id;
  const std::string eid_str = eid.str();
  result.trace = ExecutionTrace(eid_str);
  const core::VirtualTime t0 = sched.now();

  auto map_stats = std::make_shared<pipeline::MapResult>();
  const pipeline::MapOptions map_options{sc.map_failure_rate, 50.0, false};
  runtime::QueueSource map_source(
      rt, svc.queue, sc.function("map"),
      [&svc, map_options, map_stats](runtime::InvocationContext& ctx, const storage::QueueMessage& m) {
        return pipeline::map_fn(ctx, svc, m, map_options, *map_stats);
      },
      [](const storage::QueueMessage& m) { return core::peek_execution_id(m.body).str(); },
      runtime::QueueSourceConfig{sc.map_batch_size});
  map_source.start();

  std::optional<JobStatus> stop;
  const auto fail = [&](JobStatus status, std::string message) {
    stop = status;
    result.message = std::move(message);
  };
  const auto within_limit = [&](const nlohmann::json& payload, const std::string& state) {
    const auto size = payload.dump().size();
    if (size <= definition.payload_limit_bytes) return true;
    fail(JobStatus::failed, state + ": payload of " + std::to_string(size) + " bytes exceeds the " +
                                std::to_string(definition.payload_limit_bytes) + "-byte limit");
    return false;
  };

  for (std::size_t si = 0; si < definition.states.size() && !stop; ++si) {
    const StateDef& st = definition.states[si];
    if (si > 0) co_await sched.sleep_for_ms(cal.workflow_transition_ms);
    const core::VirtualTime s0 = sched.now();
    std::string outcome = "ok";

    if (st.target == "ingest") {
      nlohmann::json input = nlohmann::json::array();
      for (const auto& f : files) input.push_back({{"bucket", svc.raw.bucket()}, {"key", f}});
      if (within_limit(input, st.name)) {
        std::vector<pipeline::IngestResult> outputs(files.size());
        std::vector<sim::Task<runtime::InvocationRecord>> tasks;
        for (std::size_t i = 0; i < files.size(); ++i) {
          pipeline::IngestEvent event{eid, svc.raw.bucket(), files[i]};
          pipeline::IngestResult* slot = &outputs[i];
          const pipeline::IngestOptions options{sc.batch_size, sc.retain_source_fields};
          runtime::Runtime::Handler handler = [&svc, event, slot, options](runtime::InvocationContext& ctx) {
            *slot = {};
            return pipeline::ingest_fn(ctx, svc, event, options, *slot);
          };
          tasks.push_back(invoke_with_retry(rt, sc.function("ingest"), eid_str, std::move(handler), st.name,
                                            result.trace, definition.retries, definition.retry_backoff_ms));
        }
        const auto records = co_await sim::when_all(sched, std::move(tasks));
        for (std::size_t i = 0; i < files.size(); ++i) {
          if (records[i].outcome != runtime::Outcome::ok) {
            if (!stop) fail(JobStatus::failed, st.name + " failed for " + files[i] + ": " + describe_failure(records[i]));
            continue;
          }
          result.records_ingested += static_cast<std::int64_t>(outputs[i].records_emitted);
          result.invalid_rows += static_cast<std::int64_t>(outputs[i].invalid_rows);
          result.batches += static_cast<std::int64_t>(outputs[i].batches_emitted);
        }
      }
      map_source.stop_when_drained();
    } else if (st.target == "reduce_prep") {
      auto partitions = std::make_shared<std::vector<std::string>>();
      runtime::Runtime::Handler handler = [&svc, eid, partitions](runtime::InvocationContext& ctx) {
        return pipeline::reduce_prep_fn(ctx, svc, eid, *partitions);
      };
      const auto rec = co_await invoke_with_retry(rt, sc.function("reduce_prep"), eid_str, std::move(handler), st.name,
                                                  result.trace, definition.retries, definition.retry_backoff_ms);
      if (rec.outcome != runtime::Outcome::ok) {
        fail(JobStatus::failed, st.name + " failed: " + describe_failure(rec));
      } else {
        result.prep_partitions = *partitions;
        within_limit(nlohmann::json(*partitions), st.name);
      }
    } else if (st.target == "gate") {
      if (result.records_ingested == 0) {
        fail(JobStatus::failed, "empty input: no valid rows were ingested");
      } else {
        result.gate = co_await pipeline::reduce_gate(
            sched, svc, cal, eid, {sc.gate_poll_interval_ms, sc.gate_max_attempts, sc.override_gate});
        if (!result.gate.passed) {
          outcome = "stalled";
          fail(JobStatus::stalled, "reduce gate stalled after " + std::to_string(result.gate.attempts) +
                                       " checks: ingested=" + std::to_string(result.gate.ingested) +
                                       " mapped=" + std::to_string(result.gate.mapped));
        } else if (result.gate.overridden) {
          outcome = "overridden";
          result.warnings.push_back("reduce gate overridden at ingested=" + std::to_string(result.gate.ingested) +
                                    " mapped=" + std::to_string(result.gate.mapped) + "; " +
                                    std::to_string(result.gate.ingested - result.gate.mapped) +
                                    " records are missing from the result");
        }
      }
    } else if (st.target == "reduce1") {
      storage::IoMeter meter;
      result.partitions = svc.port->list_partitions(eid, meter);
      double list_ms = 0.0;
      for (const auto& op : meter.ops()) list_ms += cal.latency.cost_ms(op.kind, op.bytes);
      co_await sched.sleep_for_ms(list_ms);
      if (within_limit(nlohmann::json(result.partitions), st.name)) {
        std::vector<pipeline::AggregateResult> outputs(result.partitions.size());
        std::vector<sim::Task<runtime::InvocationRecord>> tasks;
        for (std::size_t i = 0; i < result.partitions.size(); ++i) {
          pipeline::AggregateResult* slot = &outputs[i];
          runtime::Runtime::Handler handler = [&svc, eid, key = result.partitions[i], slot](runtime::InvocationContext& ctx) {
            *slot = {};
            return pipeline::reduce_aggregate_fn(ctx, svc, eid, key, *slot);
          };
          tasks.push_back(invoke_with_retry(rt, sc.function("reduce1"), eid_str, std::move(handler), st.name,
                                            result.trace, definition.retries, definition.retry_backoff_ms));
        }
        const auto records = co_await sim::when_all(sched, std::move(tasks));
        for (std::size_t i = 0; i < records.size(); ++i) {
          if (records[i].outcome != runtime::Outcome::ok) {
            if (!stop) {
              fail(JobStatus::failed, st.name + " failed for partition " + result.partitions[i] + ": " +
                                          describe_failure(records[i]));
            }
          } else if (outputs[i].degenerate) {
            result.degenerate_partitions.push_back(result.partitions[i]);
            result.warnings.push_back("partition " + result.partitions[i] + " has no entries; skipped");
          }
        }
      }
    } else if (st.target == "reduce2") {
      auto ranking = std::make_shared<core::RankingResult>();
      runtime::Runtime::Handler handler = [&svc, eid, ranking, limit = sc.ranking_limit](runtime::InvocationContext& ctx) {
        return pipeline::reduce_rank_fn(ctx, svc, eid, limit, *ranking);
      };
      const auto rec = co_await invoke_with_retry(rt, sc.function("reduce2"), eid_str, std::move(handler), st.name,
                                                  result.trace, definition.retries, definition.retry_backoff_ms);
      if (rec.outcome != runtime::Outcome::ok) {
        fail(JobStatus::failed, st.name + " failed: " + describe_failure(rec));
      } else if (within_limit(core::to_json(*ranking), st.name)) {
        result.ranking = *ranking;
      }
    }

    if (stop && outcome == "ok") outcome = "failed";
    result.trace.add({s0, st.name, "", outcome, sched.now() - s0});
  }

  result.status = stop ? *stop : JobStatus::succeeded;
  result.trace.add({t0, std::string(kExecutionSpan), "", std::string(to_string(result.status)), sched.now() - t0});

  map_source.stop_when_drained();
  co_await map_source.drained().wait();

  for (const auto& rec : rt.records()) {
    if (rec.execution_id != eid_str) continue;
    result.invocations.push_back(rec);
    if (rec.function == "map") result.trace.add(span_of(rec, "Map"));
  }
  for (const auto& m : svc.queue.dead_letters()) {
    if (core::peek_execution_id(m.body) == eid) ++result.dlq_messages;
  }
  result.dlq_rows = pipeline::dead_lettered_rows(svc.queue, eid);
  if (result.dlq_rows > 0) {
    result.warnings.push_back(std::to_string(result.dlq_rows) + " records in " + std::to_string(result.dlq_messages) +
                              " batches were moved to the dead-letter queue");
  }
  result.map_pool_history = map_source.pool_history();
  co_return result;
}

}  // namespace microreduce::workflow
