#include <doctest.h>

#include <cmath>
#include <sstream>

#include "microreduce/core/errors.hpp"
#include "microreduce/core/execution_id.hpp"
#include "microreduce/runtime/calibration.hpp"
#include "microreduce/runtime/function.hpp"
#include "microreduce/runtime/ledger.hpp"
#include "microreduce/runtime/queue_source.hpp"
#include "microreduce/runtime/runtime.hpp"
#include "support.hpp"

using namespace microreduce;
using namespace microreduce::runtime;

namespace {

Calibration steady() {
  Calibration c;
  c.init_ms_jitter = 0.0;
  return c;
}

Runtime::Handler spend_for(double ms, double memory_mb = 0.0) {
  return [ms, memory_mb](InvocationContext& ctx) -> sim::Task<void> {
    ctx.note_memory_mb(memory_mb);
    co_await ctx.spend(ms);
  };
}

sim::Task<void> invoke_n(Runtime& rt, FunctionConfig fn, int n, double ms, std::vector<InvocationRecord>& out) {
  std::vector<sim::Task<InvocationRecord>> tasks;
  for (int i = 0; i < n; ++i) tasks.push_back(rt.invoke(fn, "e", spend_for(ms + i)));
  out = co_await sim::when_all(rt.scheduler(), std::move(tasks));
}

void validate_config(std::string name, int memory_mb, std::int64_t timeout_ms, int workers) {
  FunctionConfig{std::move(name), memory_mb, timeout_ms, workers}.validate();
}

double interpolate_vcpus(int mb) {
  const double xs[] = {128, 1024, 2048, 3072, 10240};
  const double ys[] = {1, 2, 2, 3, 6};
  for (int i = 1; i < 5; ++i) {
    if (mb <= xs[i]) return ys[i - 1] + (ys[i] - ys[i - 1]) * (mb - xs[i - 1]) / (xs[i] - xs[i - 1]);
  }
  return 6;
}

}  // namespace

TEST_CASE("vcpus follow the anchor interpolation") {
  CHECK(vcpus(128) == 1);
  CHECK(vcpus(1024) == 2);
  CHECK(vcpus(2048) == 2);
  CHECK(vcpus(3072) == 3);
  CHECK(vcpus(10240) == 6);
  int previous = 1;
  for (int mb = 128; mb <= 10240; mb += 64) {
    const int v = vcpus(mb);
    CHECK(v == static_cast<int>(std::lround(interpolate_vcpus(mb))));
    CHECK(v >= previous);
    previous = v;
  }
  CHECK_THROWS_AS(vcpus(127), InvalidArgument);
  CHECK_THROWS_AS(vcpus(10241), InvalidArgument);
}

TEST_CASE("effective parallelism is Amdahl over min(workers, vcpus)") {
  for (int w = 1; w <= 6; ++w) {
    for (int v = 1; v <= 6; ++v) {
      for (double p : {0.0, 0.25, 0.65, 1.0}) {
        const double m = std::min(w, v);
        CHECK(effective_parallelism(w, v, p) == doctest::Approx(1.0 / ((1.0 - p) + p / m)));
      }
    }
  }
  CHECK_THROWS_AS(effective_parallelism(0, 1, 0.5), InvalidArgument);
  CHECK_THROWS_AS(effective_parallelism(1, 1, 1.5), InvalidArgument);
}

TEST_CASE("function config validation") {
  CHECK_NOTHROW(validate_config("f", 128, 1, 1));
  CHECK_THROWS_AS(validate_config("f", 64, 1000, 1), InvalidArgument);
  CHECK_THROWS_AS(validate_config("f", 10241, 1000, 1), InvalidArgument);
  CHECK_THROWS_AS(validate_config("f", 1024, 900001, 1), InvalidArgument);
  CHECK_THROWS_AS(validate_config("f", 1024, 1000, 0), InvalidArgument);
  CHECK_THROWS_AS(validate_config("f", 1024, 1000, 3), InvalidArgument);
  CHECK_THROWS_AS(validate_config("", 1024, 1000, 1), InvalidArgument);
}

TEST_CASE("billing: 2048 MB for 88403 ms is 176806 GB-ms") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  const auto rec = testing::run(s, rt.invoke({"ingest", 2048, kMaxTimeoutMs, 2}, "e", spend_for(88403)));
  CHECK(rec.outcome == Outcome::ok);
  CHECK(rec.duration_ms == 88403);
  CHECK(rec.billed_gb_ms == doctest::Approx(176806.0));
  CHECK(rec.cold_start);
  CHECK(rec.init_ms == 850);
  CHECK(rec.start_ms == doctest::Approx(850.0));
  CHECK(s.now() == core::ms_to_virtual(850 + 88403));
}

TEST_CASE("durations round up to whole milliseconds, minimum one") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  CHECK(testing::run(s, rt.invoke({"f"}, "e", spend_for(0.2))).duration_ms == 1);
  CHECK(testing::run(s, rt.invoke({"f"}, "e", spend_for(10.001))).duration_ms == 11);
  CHECK(testing::run(s, rt.invoke({"f"}, "e", spend_for(0))).duration_ms == 1);
}

TEST_CASE("warm instances are reused until they expire") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  const FunctionConfig fn{"map"};
  CHECK(testing::run(s, rt.invoke(fn, "e", spend_for(10))).cold_start);
  const auto warm = testing::run(s, rt.invoke(fn, "e", spend_for(10)));
  CHECK_FALSE(warm.cold_start);
  CHECK(warm.init_ms == 0);
  // Another function never shares the pool.
  CHECK(testing::run(s, rt.invoke({"reduce1"}, "e", spend_for(10))).cold_start);
  s.run_until(s.now() + core::ms_to_virtual(600001));
  CHECK(testing::run(s, rt.invoke(fn, "e", spend_for(10))).cold_start);
}

TEST_CASE("concurrent invocations each need their own instance") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  std::vector<InvocationRecord> recs;
  testing::run(s, invoke_n(rt, {"map"}, 5, 100, recs));
  for (const auto& r : recs) CHECK(r.cold_start);
  testing::run(s, invoke_n(rt, {"map"}, 7, 100, recs));
  int cold = 0;
  for (const auto& r : recs) cold += r.cold_start;
  CHECK(cold == 2);
}

TEST_CASE("init durations are drawn around 850 ms") {
  sim::Scheduler s;
  Runtime rt(s, Calibration{}, {}, 17);
  double sum = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const auto rec = testing::run(s, rt.invoke({"f" + std::to_string(i)}, "e", spend_for(1)));
    REQUIRE(rec.cold_start);
    CHECK(rec.init_ms >= 0);
    sum += static_cast<double>(rec.init_ms);
  }
  const double mean = sum / n;
  CHECK(mean > 845.0);
  CHECK(mean < 855.0);
  CHECK(mean >= 811.0);
  CHECK(mean <= 860.0);
}

TEST_CASE("timeouts bill exactly the timeout") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  const auto rec = testing::run(s, rt.invoke({"reduce1", 10240, 1000, 1}, "e", spend_for(5000)));
  CHECK(rec.outcome == Outcome::timeout);
  CHECK(rec.duration_ms == 1000);
  CHECK(rec.billed_gb_ms == doctest::Approx(10000.0));
  CHECK(s.now() == core::ms_to_virtual(850 + 1000));
}

TEST_CASE("handler errors become error records") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  Runtime::Handler bad = [](InvocationContext& ctx) -> sim::Task<void> {
    co_await ctx.spend(5);
    throw InvalidArgument("bad input");
  };
  const auto rec = testing::run(s, rt.invoke({"f"}, "e", bad));
  CHECK(rec.outcome == Outcome::error);
  CHECK(rec.error == "bad input");
  CHECK(rec.duration_ms == 5);
  CHECK(rt.records().size() == 1);
}

TEST_CASE("memory watermark is capped by the configured memory") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  CHECK(testing::run(s, rt.invoke({"f", 1024}, "e", spend_for(1, 355.0))).max_mem_used_mb == 415);
  CHECK(testing::run(s, rt.invoke({"f", 128}, "e", spend_for(1, 355.0))).max_mem_used_mb == 128);
  CHECK(testing::run(s, rt.invoke({"f", 512}, "e", spend_for(1, 0.4))).max_mem_used_mb == 61);
}

TEST_CASE("account concurrency queues invocations FIFO") {
  sim::Scheduler s;
  Runtime rt(s, steady(), RuntimeLimits{3, 60, 1000});
  std::vector<InvocationRecord> recs;
  testing::run(s, invoke_n(rt, {"f"}, 10, 1000, recs));
  CHECK(rt.peak_active() == 3);
  CHECK(rt.active() == 0);
  for (std::size_t i = 3; i < recs.size(); ++i) CHECK(recs[i].start_ms >= recs[i - 3].start_ms);
}

TEST_CASE("same seed gives identical ledgers") {
  auto once = [](std::uint64_t seed) {
    sim::Scheduler s;
    Runtime rt(s, Calibration{}, {}, seed);
    std::vector<InvocationRecord> recs;
    testing::run(s, invoke_n(rt, {"f"}, 40, 100, recs));
    return rt.records();
  };
  CHECK(once(4) == once(4));
  CHECK(once(4) != once(5));
}

TEST_CASE("simulated work uses the Amdahl model") {
  sim::Scheduler s;
  Runtime rt(s, Calibration{});
  const double p = Calibration{}.parallel_fraction;
  const FunctionConfig fn{"ingest", 3072, kMaxTimeoutMs, 3};
  CHECK(rt.simulate_work(1000, 4, fn) == doctest::Approx(250.0 * ((1 - p) + p / 3)));
  CHECK(rt.simulate_work(0, 4, fn) == 0.0);
  CHECK_THROWS_AS(rt.simulate_work(-1, 4, fn), InvalidArgument);
  CHECK_THROWS_AS(rt.simulate_work(1, 0, fn), InvalidArgument);
}

TEST_CASE("attempt ids start with the instance id") {
  sim::Scheduler s;
  Runtime rt(s, steady());
  std::vector<std::string> ids;
  std::string instance;
  Runtime::Handler h = [&](InvocationContext& ctx) -> sim::Task<void> {
    instance = ctx.instance_id();
    for (int i = 0; i < 3; ++i) ids.push_back(ctx.next_attempt_id());
    co_return;
  };
  testing::run(s, rt.invoke({"map"}, "e", h));
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == instance);
  CHECK(core::is_uuid(ids[1]));
  CHECK(ids[1] != ids[0]);
  CHECK(ids[2] != ids[1]);
}

TEST_CASE("io latency is base plus per-KiB") {
  Calibration c = steady();
  c.latency.at(storage::IoKind::object_get) = {2.6, 0.03};
  CHECK(c.latency.cost_ms(storage::IoKind::object_get, 2048) == doctest::Approx(2.66));
  sim::Scheduler s;
  Runtime rt(s, c);
  Runtime::Handler h = [](InvocationContext& ctx) -> sim::Task<void> {
    storage::IoMeter m;
    m.record(storage::IoKind::kv_put, 1024);
    m.record(storage::IoKind::counter_update);
    co_await ctx.io(m);
  };
  CHECK(testing::run(s, rt.invoke({"f"}, "e", h)).duration_ms == 10);  // 4.01 + 5 rounds up
}

TEST_CASE("calibration text round-trips and rejects unknown keys") {
  Calibration c;
  c.parallel_fraction = 0.1234567890123;
  c.latency.at(storage::IoKind::kv_query).per_kb_ms = 0.0625;
  Calibration back;
  back.apply_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.parallel_fraction == c.parallel_fraction);
  Calibration d;
  d.apply_text("# comment\n  work.map_rows_per_ms = 8   # inline\n\n");
  CHECK(d.map_rows_per_ms == 8.0);
  CHECK_THROWS_AS(d.apply_text("work.nope = 1"), InvalidArgument);
  CHECK_THROWS_AS(d.apply_text("work.map_rows_per_ms = fast"), InvalidArgument);
}

TEST_CASE("re-running the ingest fit reproduces the defaults") {
  const Calibration c;
  const double fixed = c.latency.cost_ms(storage::IoKind::object_get, static_cast<std::size_t>(kAnchorFileBytes)) +
                       c.latency.cost_ms(storage::IoKind::counter_update);
  const auto fit = fit_ingest_model(kIngestAnchors, kAnchorRows, fixed);
  CHECK(fit.parallel_fraction == doctest::Approx(c.parallel_fraction).epsilon(1e-9));
  CHECK(fit.rows_per_ms == doctest::Approx(c.ingest_rows_per_ms).epsilon(1e-9));

  // Independent oracle: solve the 2x2 normal equations of y = a + b x directly.
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& a : kIngestAnchors) {
    const double x = 1.0 / std::min(a.workers, vcpus(a.memory_mb));
    const double y = a.duration_ms - fixed;
    n += 1, sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  const double a0 = (sy * sxx - sx * sxy) / det;
  const double b0 = (n * sxy - sx * sy) / det;
  CHECK(fit.parallel_fraction == doctest::Approx(b0 / (a0 + b0)));
  CHECK(fit.rows_per_ms == doctest::Approx(kAnchorRows / (a0 + b0)));
  double sq = 0;
  for (const auto& a : kIngestAnchors) {
    const double x = 1.0 / std::min(a.workers, vcpus(a.memory_mb));
    const double r = a.duration_ms - fixed - (a0 + b0 * x);
    sq += r * r;
  }
  CHECK(fit.residual_ms == doctest::Approx(std::sqrt(sq / 3)));
}

TEST_CASE("ledger csv round-trips") {
  std::vector<InvocationRecord> recs{
      {"ingest", "e1", "i1", true, 853, 59110, 118220.0, 415, Outcome::ok, 2048, 0.0, ""},
      {"map", "e1", "i2", false, 0, 2719, 339.875, 98, Outcome::timeout, 128, 0.0, ""},
      {"reduce1", "e1", "i3", true, 823, 1, 10.0, 61, Outcome::error, 10240, 0.0, ""},
  };
  std::stringstream ss;
  write_ledger_csv(ss, recs);
  CHECK(ss.str().rfind(std::string(kLedgerHeader) + "\n", 0) == 0);
  CHECK(read_ledger_csv(ss) == recs);
}

TEST_CASE("queue source pool grows by 60 per minute up to the cap") {
  for (std::size_t cap : {1000u, 250u, 61u}) {
    sim::Scheduler s;
    Runtime rt(s, steady(), RuntimeLimits{1000, 60, cap});
    storage::MessageQueue q(s, storage::QueuePolicy{900000.0, 3, std::nullopt});
    for (int i = 0; i < 40000; ++i) q.send("m");
    QueueSource source(
        rt, q, {"map"},
        [](InvocationContext& ctx, const storage::QueueMessage&) -> sim::Task<void> { co_await ctx.spend(10000); },
        [](const storage::QueueMessage&) { return std::string("e"); });
    source.start();
    source.stop_when_drained();
    s.run();
    CHECK(q.empty());
    CHECK(source.stats().messages_processed == 40000);
    const auto& history = source.pool_history();
    auto size_at = [&](core::VirtualTime t) {
      std::size_t size = 0;
      for (const auto& [at, n] : history) {
        if (at <= t) size = n;
      }
      return size;
    };
    for (std::size_t minute = 0; minute <= 8; ++minute) {
      const auto t = core::ms_to_virtual(60000.0 * static_cast<double>(minute));
      CHECK(size_at(t) == std::min<std::size_t>(1 + 60 * minute, cap));
    }
  }
}
