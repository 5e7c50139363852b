#include <doctest.h>

#include <random>
#include <set>

#include "microreduce/core/errors.hpp"
#include "microreduce/core/query.hpp"
#include "microreduce/core/serialize.hpp"
#include "microreduce/data/generator.hpp"
#include "microreduce/pipeline/functions.hpp"
#include "microreduce/pipeline/services.hpp"
#include "support.hpp"

using namespace microreduce;
using namespace microreduce::pipeline;
using runtime::InvocationContext;
using runtime::Outcome;

namespace {

struct Rig {
  explicit Rig(ServicesConfig config = {}) : svc(sched, config), rt(sched, steady(), {}, 1), ids(2) {
    eid.emplace(ids.new_execution_id());
  }

  static runtime::Calibration steady() {
    runtime::Calibration c;
    c.init_ms_jitter = 0.0;
    return c;
  }

  storage::QueueMessage message(const std::vector<core::FlightRecord>& records) {
    svc.queue.send(core::encode_micro_batch({*eid, seq++, "flights_01.csv", records}));
    auto got = svc.queue.receive(1);
    REQUIRE(got.size() == 1);
    return got[0];
  }

  runtime::InvocationRecord map(const storage::QueueMessage& m, MapOptions options, MapResult& result) {
    auto rec = testing::run(sched, rt.invoke({"map"}, eid->str(), [&](InvocationContext& ctx) {
      return map_fn(ctx, svc, m, options, result);
    }));
    svc.queue.remove(m.receipt);
    return rec;
  }

  std::vector<storage::ShuffleEntry> entries() {
    storage::IoMeter meter;
    std::vector<storage::ShuffleEntry> out;
    for (const auto& p : svc.port->list_partitions(*eid, meter)) {
      for (auto& e : svc.port->read_partition(*eid, p, meter)) out.push_back(std::move(e));
    }
    return out;
  }

  sim::Scheduler sched;
  Services svc;
  runtime::Runtime rt;
  core::IdGenerator ids;
  std::optional<core::ExecutionId> eid;
  std::size_t seq = 0;
};

const std::string kI1 = "27b8c1d8-4e89-4969-83f3-72df580132f9";
const std::string kI2 = "37b8c1d8-4e89-4969-83f3-72df580132f9";

std::vector<core::FlightRecord> rows(const std::string& carrier, int n, std::int64_t delay) {
  return std::vector<core::FlightRecord>(static_cast<std::size_t>(n), core::FlightRecord{carrier, delay, true, {}});
}

}  // namespace

TEST_CASE("a 30/30/30/10 batch yields exactly four shuffle entries") {
  for (auto backend : {storage::ShuffleBackend::object, storage::ShuffleBackend::kv}) {
    Rig rig(ServicesConfig{backend, {}, {}, {}});
    std::vector<core::FlightRecord> batch;
    for (auto part : {rows("AA", 30, 5), rows("BB", 30, -2), rows("CC", 30, 11), rows("DD", 10, 40)}) {
      batch.insert(batch.end(), part.begin(), part.end());
    }
    MapResult result;
    const auto rec = rig.map(rig.message(batch), {}, result);
    CHECK(rec.outcome == Outcome::ok);
    CHECK(result.entries_written == 4);
    CHECK(result.rows_processed == 100);
    const auto entries = rig.entries();
    REQUIRE(entries.size() == 4);
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> got;
    for (const auto& e : entries) {
      got[e.partition_key] = {e.delay_sum, e.count};
      CHECK(e.instance_id == rec.instance_id);
    }
    CHECK(got["AA"] == std::pair<std::int64_t, std::int64_t>{150, 30});
    CHECK(got["BB"] == std::pair<std::int64_t, std::int64_t>{-60, 30});
    CHECK(got["CC"] == std::pair<std::int64_t, std::int64_t>{330, 30});
    CHECK(got["DD"] == std::pair<std::int64_t, std::int64_t>{400, 10});
    CHECK(rig.svc.kv.counters(*rig.eid).mapped == 100);
  }
}

TEST_CASE("entries per batch equal distinct valid carriers per batch") {
  std::mt19937_64 rng(8);
  static const std::vector<std::string> kCodes{"AA", "UA", "WN", "9E", "DL", "OO", "XE", "FL"};
  for (auto backend : {storage::ShuffleBackend::object, storage::ShuffleBackend::kv}) {
    Rig rig(ServicesConfig{backend, {}, {}, {}});
    std::int64_t expected_mapped = 0;
    std::size_t written = 0;
    for (int round = 0; round < 5000; ++round) {
      std::vector<core::FlightRecord> batch;
      std::set<std::string> distinct;
      const auto n = testing::uniform(rng, 0, 100);
      for (int i = 0; i < n; ++i) {
        core::FlightRecord r{kCodes[static_cast<std::size_t>(testing::uniform(rng, 0, 7))],
                             testing::uniform(rng, -30, 300), testing::uniform(rng, 0, 5) > 0, {}};
        if (r.valid) {
          distinct.insert(r.carrier);
          ++expected_mapped;
        }
        batch.push_back(r);
      }
      MapResult result;
      rig.map(rig.message(batch), {}, result);
      CHECK(result.entries_written == distinct.size());
      written += distinct.size();
    }
    CHECK(rig.entries().size() == written);
    CHECK(rig.svc.kv.counters(*rig.eid).mapped == expected_mapped);
  }
}

TEST_CASE("a write throttled twice removes the attempt's entries") {
  Rig rig(ServicesConfig{storage::ShuffleBackend::kv, {0.001, 2.0, true}, {}, {}});
  auto batch = rows("AA", 3, 1);
  for (auto part : {rows("BB", 3, 1), rows("CC", 3, 1)}) batch.insert(batch.end(), part.begin(), part.end());
  MapResult result;
  const auto rec = rig.map(rig.message(batch), {}, result);
  CHECK(rec.outcome == Outcome::error);
  CHECK(rec.error.find("failed after retry") != std::string::npos);
  CHECK(rig.svc.kv.item_count() == 0);
  CHECK(rig.svc.kv.counters(*rig.eid).mapped == 0);
  CHECK(rig.svc.kv.throttled_writes() == 2);
}

TEST_CASE("one throttled write succeeds on retry after the backoff") {
  // One token per 50 ms: the retry after the backoff finds a fresh token.
  Rig rig(ServicesConfig{storage::ShuffleBackend::kv, {20.0, 1.0, true}, {}, {}});
  auto batch = rows("AA", 2, 1);
  auto bb = rows("BB", 2, 1);
  batch.insert(batch.end(), bb.begin(), bb.end());
  MapResult result;
  const auto rec = rig.map(rig.message(batch), {}, result);
  CHECK(rec.outcome == Outcome::ok);
  CHECK(rig.svc.kv.item_count() == 2);
  CHECK(rig.svc.kv.throttled_writes() >= 1);
}

TEST_CASE("an injected failure leaves no entries and no counter update") {
  Rig rig;
  MapResult result;
  const auto rec = rig.map(rig.message(rows("AA", 10, 3)), MapOptions{1.0, 50.0, false}, result);
  CHECK(rec.outcome == Outcome::error);
  CHECK(rig.entries().empty());
  CHECK(rig.svc.kv.counters(*rig.eid).mapped == 0);
}

TEST_CASE("ingest emits micro-batches and counts valid rows") {
  Rig rig;
  data::GenSpec spec;
  spec.rows_per_file = 1234;
  spec.invalid_fraction = 0.1;
  const auto file = data::generate_file(spec, 0);
  rig.svc.raw.put(file.name, file.body);
  IngestResult result;
  const auto rec = testing::run(rig.sched, rig.rt.invoke({"ingest", 2048, 900000, 2}, rig.eid->str(),
                                                         [&](InvocationContext& ctx) {
                                                           return ingest_fn(ctx, rig.svc,
                                                                            {*rig.eid, rig.svc.raw.bucket(), file.name},
                                                                            {100, false}, result);
                                                         }));
  CHECK(rec.outcome == Outcome::ok);
  const auto valid = static_cast<std::size_t>(file.ledger.valid());
  CHECK(result.records_emitted == valid);
  CHECK(result.invalid_rows == static_cast<std::size_t>(file.ledger.invalid));
  CHECK(result.batches_emitted == (valid + 99) / 100);
  CHECK(rig.svc.queue.size() == result.batches_emitted);
  CHECK(rig.svc.kv.counters(*rig.eid).ingested == static_cast<std::int64_t>(valid));

  std::map<std::string, core::CarrierAggregate> seen;
  std::set<std::size_t> seqs;
  while (true) {
    auto msgs = rig.svc.queue.receive(10);
    if (msgs.empty()) break;
    for (const auto& m : msgs) {
      const auto batch = core::decode_micro_batch(m.body);
      CHECK(batch.records.size() <= 100);
      seqs.insert(batch.seq);
      for (const auto& [c, agg] : core::group_by_carrier(batch.records)) {
        auto& s = seen[c];
        s.carrier = c;
        s.delay_sum += agg.delay_sum;
        s.count += agg.count;
      }
      rig.svc.queue.remove(m.receipt);
    }
  }
  CHECK(seqs.size() == result.batches_emitted);
  CHECK(seen == file.ledger.carriers);
}

TEST_CASE("ingest of a missing object fails") {
  Rig rig;
  IngestResult result;
  const auto rec = testing::run(rig.sched, rig.rt.invoke({"ingest"}, rig.eid->str(), [&](InvocationContext& ctx) {
    return ingest_fn(ctx, rig.svc, {*rig.eid, rig.svc.raw.bucket(), "nope.csv"}, {}, result);
  }));
  CHECK(rec.outcome == Outcome::error);
}

TEST_CASE("gate passes on equal non-zero counters") {
  Rig rig;
  rig.svc.kv.counter_add(*rig.eid, core::CounterField::ingested, 100);
  rig.svc.kv.counter_add(*rig.eid, core::CounterField::mapped, 100);
  const auto state = testing::run(rig.sched, reduce_gate(rig.sched, rig.svc, rig.rt.calibration(), *rig.eid, {}));
  CHECK(state.passed);
  CHECK_FALSE(state.overridden);
  CHECK(state.attempts == 1);
  CHECK(rig.sched.now() == core::ms_to_virtual(3));
}

TEST_CASE("gate stalls after max attempts unless overridden") {
  for (bool override_gate : {false, true}) {
    Rig rig;
    rig.svc.kv.counter_add(*rig.eid, core::CounterField::ingested, 100);
    rig.svc.kv.counter_add(*rig.eid, core::CounterField::mapped, 94);
    const auto state = testing::run(
        rig.sched, reduce_gate(rig.sched, rig.svc, rig.rt.calibration(), *rig.eid, {1000.0, 5, override_gate}));
    CHECK(state.attempts == 5);
    CHECK(state.passed == override_gate);
    CHECK(state.overridden == override_gate);
    CHECK(state.ingested == 100);
    CHECK(state.mapped == 94);
    CHECK(rig.sched.now() == core::ms_to_virtual(5 * 3 + 4 * 1000));
  }
  CHECK_FALSE(gate_condition(0, 0));
  CHECK(gate_condition(5, 5));
  CHECK_FALSE(gate_condition(5, 4));
}

TEST_CASE("gate ordering check follows log order") {
  core::ManualClock clock;
  AuditLog log(clock);
  const auto eid = core::ExecutionId::parse("07b8c1d8-4e89-4969-83f3-72df580132f9");
  const auto other = core::ExecutionId::parse("17b8c1d8-4e89-4969-83f3-72df580132f9");
  log.record(AuditKind::map_counter_write, eid);
  log.record(AuditKind::gate_pass, eid);
  log.record(AuditKind::aggregate_read, eid, "AA");
  log.record(AuditKind::map_counter_write, other);
  CHECK(gate_ordering_holds(log, eid));
  log.record(AuditKind::map_counter_write, eid);
  CHECK_FALSE(gate_ordering_holds(log, eid));
}

TEST_CASE("aggregate merges a partition and rank orders the results") {
  Rig rig;
  storage::IoMeter meter;
  rig.svc.port->write_entry({*rig.eid, "AA", kI1, 100, 10, std::nullopt}, meter);
  rig.svc.port->write_entry({*rig.eid, "AA", kI2, 50, 10, std::nullopt}, meter);
  rig.svc.port->write_entry({*rig.eid, "UA", kI1, 20, 10, std::nullopt}, meter);
  for (const std::string p : {"AA", "UA", "ZZ"}) {
    AggregateResult result;
    testing::run(rig.sched, rig.rt.invoke({"reduce1", 10240}, rig.eid->str(), [&](InvocationContext& ctx) {
      return reduce_aggregate_fn(ctx, rig.svc, *rig.eid, p, result);
    }));
    if (p == "AA") CHECK(result.aggregate == core::CarrierAggregate{"AA", 150, 20});
    if (p == "UA") CHECK(result.entries_read == 1);
    CHECK(result.degenerate == (p == "ZZ"));
  }
  core::RankingResult ranking;
  testing::run(rig.sched, rig.rt.invoke({"reduce2"}, rig.eid->str(), [&](InvocationContext& ctx) {
    return reduce_rank_fn(ctx, rig.svc, *rig.eid, 10, ranking);
  }));
  CHECK(ranking == core::rank_carriers({{"AA", 150, 20}, {"UA", 20, 10}}));
  CHECK(rig.svc.kv.ranking(*rig.eid) == ranking);
  CHECK(gate_ordering_holds(rig.svc.audit, *rig.eid));
}

TEST_CASE("reduce prep lists the written partitions") {
  Rig rig;
  storage::IoMeter meter;
  rig.svc.port->write_entry({*rig.eid, "WN", kI1, 1, 1, std::nullopt}, meter);
  rig.svc.port->write_entry({*rig.eid, "AA", kI1, 1, 1, std::nullopt}, meter);
  std::vector<std::string> partitions;
  testing::run(rig.sched, rig.rt.invoke({"reduce_prep"}, rig.eid->str(), [&](InvocationContext& ctx) {
    return reduce_prep_fn(ctx, rig.svc, *rig.eid, partitions);
  }));
  CHECK(partitions == std::vector<std::string>{"AA", "WN"});
}

TEST_CASE("dead-lettered rows count only valid records of the execution") {
  Rig rig(ServicesConfig{storage::ShuffleBackend::object, {}, {}, {0.0, 1, std::nullopt}});
  auto batch = rows("AA", 7, 1);
  batch.push_back({"AA", 0, false, {}});
  rig.svc.queue.send(core::encode_micro_batch({*rig.eid, 0, "f", batch}));
  rig.svc.queue.receive(1);
  rig.svc.queue.receive(1);
  CHECK(rig.svc.queue.dead_letters().size() == 1);
  CHECK(dead_lettered_rows(rig.svc.queue, *rig.eid) == 7);
  CHECK(dead_lettered_rows(rig.svc.queue, core::ExecutionId::parse("17b8c1d8-4e89-4969-83f3-72df580132f9")) == 0);
}
