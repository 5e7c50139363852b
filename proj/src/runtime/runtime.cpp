#include "microreduce/runtime/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace microreduce::runtime {

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::ok: return "ok";
    case Outcome::timeout: return "timeout";
    case Outcome::error: return "error";
  }
  return "error";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "ok") return Outcome::ok;
  if (text == "timeout") return Outcome::timeout;
  if (text == "error") return Outcome::error;
  throw InvalidArgument("unknown outcome '" + std::string(text) + "'");
}

InvocationContext::InvocationContext(Runtime& runtime, const FunctionConfig& function, std::string execution_id,
                                     std::string instance_id, core::VirtualTime deadline)
    : runtime_(runtime),
      function_(function),
      execution_id_(std::move(execution_id)),
      instance_id_(std::move(instance_id)),
      deadline_(deadline) {}

core::VirtualTime InvocationContext::now() const { return runtime_.scheduler().now(); }
sim::Scheduler& InvocationContext::scheduler() { return runtime_.scheduler(); }
const Calibration& InvocationContext::calibration() const { return runtime_.calibration(); }
std::mt19937_64& InvocationContext::rng() { return runtime_.rng(); }

std::string InvocationContext::next_attempt_id() {
  return attempts_++ == 0 ? instance_id_ : runtime_.next_instance_id();
}

sim::Task<void> InvocationContext::spend(double ms) {
  if (!(ms > 0.0)) co_return;
  auto& sched = runtime_.scheduler();
  const core::VirtualTime until = sched.now() + core::ms_to_virtual(ms);
  if (until > deadline_) {
    co_await sched.sleep_until(deadline_);
    throw TimeoutError(function_.name + " timed out after " + std::to_string(function_.timeout_ms) + " ms");
  }
  co_await sched.sleep_until(until);
}

double InvocationContext::work_ms(double units, double units_per_ms) const {
  return runtime_.simulate_work(units, units_per_ms, function_);
}

sim::Task<void> InvocationContext::work(double units, double units_per_ms) {
  co_await spend(work_ms(units, units_per_ms));
}

double InvocationContext::io_cost_ms(storage::IoKind kind, std::size_t bytes) {
  double ms = runtime_.calibration().latency.cost_ms(kind, bytes);
  const double j = runtime_.calibration().io_jitter_fraction;
  if (j > 0.0 && ms > 0.0) {
    std::uniform_real_distribution<double> dist(1.0 - j, 1.0 + j);
    ms *= dist(runtime_.rng());
  }
  return ms;
}

sim::Task<void> InvocationContext::io(storage::IoKind kind, std::size_t bytes) {
  co_await spend(io_cost_ms(kind, bytes));
}

sim::Task<void> InvocationContext::io(const storage::IoMeter& meter) {
  double total = 0.0;
  for (const auto& op : meter.ops()) total += io_cost_ms(op.kind, op.bytes);
  co_await spend(total);
}

void InvocationContext::note_memory_mb(double mb) { watermark_mb_ = std::max(watermark_mb_, mb); }

Runtime::Runtime(sim::Scheduler& scheduler, Calibration calibration, RuntimeLimits limits, std::uint64_t seed)
    : scheduler_(scheduler),
      calibration_(std::move(calibration)),
      limits_(limits),
      concurrency_(scheduler, limits.account_concurrency),
      ids_(seed ^ 0x9e3779b97f4a7c15ULL),
      rng_(seed) {
  if (limits_.account_concurrency == 0 || limits_.queue_scale_per_min == 0 || limits_.queue_scale_cap == 0) {
    throw InvalidArgument("runtime limits must be positive");
  }
}

double Runtime::simulate_work(double units, double units_per_ms, const FunctionConfig& function) const {
  if (units < 0.0) throw InvalidArgument("work units must be non-negative");
  if (units == 0.0) return 0.0;
  if (!(units_per_ms > 0.0)) throw InvalidArgument("work rate must be positive");
  const double speedup = effective_parallelism(function.workers, vcpus(function.memory_mb), calibration_.parallel_fraction);
  return units / (units_per_ms * speedup);
}

bool Runtime::take_warm_instance(const std::string& function) {
  auto it = warm_.find(function);
  if (it == warm_.end()) return false;
  auto& idle = it->second;
  const core::VirtualTime horizon = core::ms_to_virtual(calibration_.warm_pool_idle_ms);
  const core::VirtualTime now = scheduler_.now();
  std::erase_if(idle, [&](core::VirtualTime since) { return now - since > horizon; });
  if (idle.empty()) return false;
  idle.pop_back();
  return true;
}

void Runtime::return_instance(const std::string& function) { warm_[function].push_back(scheduler_.now()); }

std::int64_t Runtime::draw_init_ms() {
  std::normal_distribution<double> dist(calibration_.init_ms_mean, calibration_.init_ms_jitter);
  const double draw = calibration_.init_ms_jitter > 0.0 ? dist(rng_) : calibration_.init_ms_mean;
  return std::max<std::int64_t>(0, std::llround(draw));
}

sim::Task<InvocationRecord> Runtime::invoke(FunctionConfig function, std::string execution_id, Handler handler) {
  function.validate();
  co_await concurrency_.acquire();
  ++active_;
  peak_active_ = std::max(peak_active_, active_);

  InvocationRecord rec;
  rec.function = function.name;
  rec.execution_id = std::move(execution_id);
  rec.instance_id = ids_.next_uuid();
  rec.memory_mb = function.memory_mb;
  rec.cold_start = !take_warm_instance(function.name);
  if (rec.cold_start) {
    rec.init_ms = draw_init_ms();
    co_await scheduler_.sleep_for_ms(static_cast<double>(rec.init_ms));
  }

  const core::VirtualTime start = scheduler_.now();
  rec.start_ms = core::virtual_to_ms(start);
  InvocationContext ctx(*this, function, rec.execution_id, rec.instance_id,
                        start + function.timeout_ms * core::kMicrosPerMs);
  try {
    co_await handler(ctx);
    rec.outcome = Outcome::ok;
  } catch (const TimeoutError& e) {
    rec.outcome = Outcome::timeout;
    rec.error = e.what();
  } catch (const std::exception& e) {
    rec.outcome = Outcome::error;
    rec.error = e.what();
  } catch (...) {
    rec.outcome = Outcome::error;
    rec.error = "unknown error";
  }

  const core::VirtualTime elapsed = scheduler_.now() - start;
  if (rec.outcome == Outcome::timeout) {
    rec.duration_ms = function.timeout_ms;
  } else {
    rec.duration_ms = std::max<std::int64_t>(1, (elapsed + core::kMicrosPerMs - 1) / core::kMicrosPerMs);
  }
  rec.billed_gb_ms = static_cast<double>(function.memory_mb) / 1024.0 * static_cast<double>(rec.duration_ms);
  rec.max_mem_used_mb = std::min<std::int64_t>(
      function.memory_mb, static_cast<std::int64_t>(std::ceil(calibration_.runtime_base_mb + ctx.memory_watermark_mb())));

  return_instance(function.name);
  --active_;
  concurrency_.release();
  records_.push_back(rec);
  co_return rec;
}

}  // namespace microreduce::runtime
