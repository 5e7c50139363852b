#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "microreduce/core/errors.hpp"
#include "microreduce/core/execution_id.hpp"
#include "microreduce/runtime/calibration.hpp"
#include "microreduce/runtime/function.hpp"
#include "microreduce/sim/scheduler.hpp"
#include "microreduce/storage/io.hpp"

namespace microreduce::runtime {

class TimeoutError : public Error {
 public:
  using Error::Error;
};

struct RuntimeLimits {
  std::size_t account_concurrency = 1000;
  std::size_t queue_scale_per_min = 60;
  std::size_t queue_scale_cap = 1000;
};

enum class Outcome { ok, timeout, error };

std::string_view to_string(Outcome outcome);
Outcome parse_outcome(std::string_view text);

/// Ledger entry for one invocation.
struct InvocationRecord {
  std::string function;
  std::string execution_id;
  std::string instance_id;
  bool cold_start = false;
  std::int64_t init_ms = 0;
  std::int64_t duration_ms = 0;
  double billed_gb_ms = 0.0;
  std::int64_t max_mem_used_mb = 0;
  Outcome outcome = Outcome::ok;

  // Not part of the exported ledger.
  int memory_mb = 0;
  double start_ms = 0.0;  ///< handler start (after any init), virtual ms
  std::string error;

  friend bool operator==(const InvocationRecord&, const InvocationRecord&) = default;
};

class Runtime;

/// Handed to every handler. All time a handler consumes flows through
/// spend(); crossing the deadline throws TimeoutError at the deadline instant.
class InvocationContext {
 public:
  InvocationContext(Runtime& runtime, const FunctionConfig& function, std::string execution_id,
                    std::string instance_id, core::VirtualTime deadline);

  const FunctionConfig& function() const { return function_; }
  const std::string& execution_id() const { return execution_id_; }
  const std::string& instance_id() const { return instance_id_; }
  /// Identity for one unit of work inside this invocation: the instance id
  /// on the first call, a fresh UUID on later calls.
  std::string next_attempt_id();
  core::VirtualTime now() const;
  core::VirtualTime deadline() const { return deadline_; }
  sim::Scheduler& scheduler();
  const Calibration& calibration() const;
  std::mt19937_64& rng();

  sim::Task<void> spend(double ms);
  /// simulate_work(units, units_per_ms) for this function's configuration.
  double work_ms(double units, double units_per_ms) const;
  /// Charges work_ms(units, units_per_ms).
  sim::Task<void> work(double units, double units_per_ms);
  sim::Task<void> io(storage::IoKind kind, std::size_t bytes = 0);
  sim::Task<void> io(const storage::IoMeter& meter);

  /// Raises the memory watermark to at least `mb` above the runtime baseline.
  void note_memory_mb(double mb);
  double memory_watermark_mb() const { return watermark_mb_; }

 private:
  double io_cost_ms(storage::IoKind kind, std::size_t bytes);

  Runtime& runtime_;
  FunctionConfig function_;
  std::string execution_id_;
  std::string instance_id_;
  core::VirtualTime deadline_;
  double watermark_mb_ = 0.0;
  int attempts_ = 0;
};

/// Simulated Function-as-a-Service executor on a virtual clock.
class Runtime {
 public:
  using Handler = std::function<sim::Task<void>(InvocationContext&)>;

  Runtime(sim::Scheduler& scheduler, Calibration calibration, RuntimeLimits limits = {}, std::uint64_t seed = 0);

  /// Waits (FIFO) for a concurrency slot, charges a cold start when no warm
  /// instance is free, runs the handler under the function's timeout, and
  /// appends the resulting record to the ledger. Handler failures are
  /// reported through the record, never thrown.
  sim::Task<InvocationRecord> invoke(FunctionConfig function, std::string execution_id, Handler handler);

  /// elapsed ms = units / (units_per_ms * effective_parallelism(workers, vcpus(memory)))
  double simulate_work(double units, double units_per_ms, const FunctionConfig& function) const;

  sim::Scheduler& scheduler() { return scheduler_; }
  const Calibration& calibration() const { return calibration_; }
  const RuntimeLimits& limits() const { return limits_; }
  std::mt19937_64& rng() { return rng_; }

  const std::vector<InvocationRecord>& records() const { return records_; }
  std::size_t active() const { return active_; }
  std::size_t peak_active() const { return peak_active_; }
  std::size_t waiting_for_concurrency() const { return concurrency_.waiting(); }

  std::string next_instance_id() { return ids_.next_uuid(); }

 private:
  bool take_warm_instance(const std::string& function);
  void return_instance(const std::string& function);
  std::int64_t draw_init_ms();

  sim::Scheduler& scheduler_;
  Calibration calibration_;
  RuntimeLimits limits_;
  sim::Semaphore concurrency_;
  core::IdGenerator ids_;
  std::mt19937_64 rng_;
  std::unordered_map<std::string, std::vector<core::VirtualTime>> warm_;  // idle-since per free instance
  std::vector<InvocationRecord> records_;
  std::size_t active_ = 0;
  std::size_t peak_active_ = 0;
};

}  // namespace microreduce::runtime
