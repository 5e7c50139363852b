#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "microreduce/core/execution_id.hpp"
#include "microreduce/core/records.hpp"
#include "microreduce/pipeline/functions.hpp"
#include "microreduce/pipeline/services.hpp"
#include "microreduce/runtime/calibration.hpp"
#include "microreduce/runtime/runtime.hpp"
#include "microreduce/sim/scheduler.hpp"
#include "microreduce/workflow/definition.hpp"
#include "microreduce/workflow/scenario.hpp"
#include "microreduce/workflow/trace.hpp"

namespace microreduce::workflow {

enum class JobStatus { succeeded, failed, stalled };

std::string_view to_string(JobStatus status);

struct JobResult {
  explicit JobResult(core::ExecutionId id) : execution_id(std::move(id)) {}

  core::ExecutionId execution_id;
  JobStatus status = JobStatus::failed;
  std::string message;
  std::vector<std::string> warnings;
  core::RankingResult ranking;
  ExecutionTrace trace;
  pipeline::GateState gate;
  /// Ledger entries of this execution, in completion order.
  std::vector<runtime::InvocationRecord> invocations;
  std::int64_t records_ingested = 0;
  std::int64_t invalid_rows = 0;
  std::int64_t batches = 0;
  std::int64_t dlq_messages = 0;
  std::int64_t dlq_rows = 0;
  std::vector<std::string> prep_partitions;
  std::vector<std::string> partitions;
  std::vector<std::string> degenerate_partitions;
  std::vector<std::pair<core::VirtualTime, std::size_t>> map_pool_history;
};

/// One simulated account: scheduler, services, and runtime configured from a
/// scenario. Raw input files are loaded into services().raw before run_job.
class Environment {
 public:
  explicit Environment(ScenarioConfig scenario, runtime::Calibration calibration = runtime::Calibration::defaults());

  const ScenarioConfig& scenario() const { return scenario_; }
  sim::Scheduler& scheduler() { return *scheduler_; }
  pipeline::Services& services() { return *services_; }
  runtime::Runtime& runtime() { return *runtime_; }

  /// Runs the workflow over `files` (keys in the raw bucket) and drives the
  /// simulation until every spawned activity has finished.
  JobResult run_job(const std::vector<std::string>& files, const WorkflowDefinition& definition = default_definition());

  /// The same job as a coroutine on this environment's scheduler.
  sim::Task<JobResult> execute(std::vector<std::string> files, WorkflowDefinition definition);

 private:
  ScenarioConfig scenario_;
  std::unique_ptr<sim::Scheduler> scheduler_;
  std::unique_ptr<pipeline::Services> services_;
  std::unique_ptr<runtime::Runtime> runtime_;
  core::IdGenerator ids_;
};

}  // namespace microreduce::workflow
