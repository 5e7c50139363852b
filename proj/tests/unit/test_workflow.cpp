#include <doctest.h>

#include <cmath>
#include <sstream>

#include "microreduce/core/errors.hpp"
#include "microreduce/data/generator.hpp"
#include "microreduce/workflow/orchestrator.hpp"
#include "support.hpp"

using namespace microreduce;
using namespace microreduce::workflow;

namespace {

ExecutionTrace trace_of(const std::array<double, 5>& phase_s, double total_s) {
  static const std::array<std::string, 5> kStates{"ParallelIngest", "ReducePrep", "ReduceGate",
                                                  "ParallelReduceAggregate", "ReduceRank"};
  ExecutionTrace t("x");
  core::VirtualTime at = 0;
  t.add({0, std::string(kExecutionSpan), "", "succeeded", core::ms_to_virtual(total_s * 1000.0)});
  for (std::size_t i = 0; i < 5; ++i) {
    const auto d = core::ms_to_virtual(phase_s[i] * 1000.0);
    t.add({at, kStates[i], "", "ok", d});
    at += d;
  }
  return t;
}

ScenarioConfig small(storage::ShuffleBackend backend) {
  auto sc = builtin_scenario(1);
  sc.shuffle = backend;
  sc.files = 3;
  return sc;
}

std::vector<std::string> load(Environment& env, std::size_t files, std::size_t rows, data::Ledger& ledger) {
  data::GenSpec spec;
  spec.files = files;
  spec.rows_per_file = rows;
  const auto ds = data::generate_dataset(spec, env.services().raw);
  ledger = ds.ledger;
  return ds.files;
}

const TraceEvent& state_span(const JobResult& r, const std::string& name) {
  for (const auto& e : r.trace.events()) {
    if (e.state == name && e.instance_id.empty()) return e;
  }
  FAIL("missing span " << name);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("default definition round-trips through text") {
  const auto def = default_definition();
  CHECK_NOTHROW(def.validate());
  const auto again = WorkflowDefinition::parse(def.to_text());
  REQUIRE(again.states.size() == def.states.size());
  for (std::size_t i = 0; i < def.states.size(); ++i) {
    CHECK(again.states[i].name == def.states[i].name);
    CHECK(again.states[i].kind == def.states[i].kind);
    CHECK(again.states[i].target == def.states[i].target);
    CHECK(again.states[i].fanout == def.states[i].fanout);
    CHECK(again.states[i].terminal == def.states[i].terminal);
  }
  CHECK(again.payload_limit_bytes == def.payload_limit_bytes);
  CHECK(again.to_text() == def.to_text());
}

TEST_CASE("definitions violating the state rules are rejected") {
  auto def = default_definition();
  std::swap(def.states[2], def.states[3]);
  CHECK_THROWS_AS(def.validate(), InvalidArgument);

  def = default_definition();
  def.states.back().terminal = false;
  CHECK_THROWS_AS(def.validate(), InvalidArgument);

  def = default_definition();
  def.states.erase(def.states.begin() + 2);
  CHECK_THROWS_AS(def.validate(), InvalidArgument);

  def = default_definition();
  def.states[0].fanout = "partitions";
  CHECK_THROWS_AS(def.validate(), InvalidArgument);

  CHECK_THROWS_AS(WorkflowDefinition::parse("state A bogus ingest files end\n"), InvalidArgument);
}

TEST_CASE("trace csv round-trips exactly") {
  ExecutionTrace t("e");
  t.add({1500, "ReduceGate", "", "ok", 2'000'001});
  t.add({0, "ParallelIngest", "07b8c1d8-4e89-4969-83f3-72df580132f9", "timeout", 999});
  t.add({0, std::string(kExecutionSpan), "", "succeeded", 9'000'000});
  std::stringstream ss;
  t.write_csv(ss);
  CHECK(ss.str().rfind(kTraceHeader, 0) == 0);
  const auto back = ExecutionTrace::read_csv(ss, "e");
  CHECK(back.events() == t.events());
  CHECK(format_ms(12345) == "12.345");
  CHECK(parse_ms("12.345") == 12345);
}

TEST_CASE("phase breakdown sums spans per phase") {
  const auto b = phase_breakdown(trace_of({4.0, 1.0, 2.0, 2.5, 0.25}, 10.0));
  CHECK(b.seconds[kIngest] == doctest::Approx(4.0));
  CHECK(b.seconds[kReduceAggregate] == doctest::Approx(2.5));
  CHECK(b.seconds[kOverhead] == doctest::Approx(0.25));
  CHECK(b.seconds[kTotal] == doctest::Approx(10.0));
  CHECK(b.percent[kIngest] == doctest::Approx(40.0));
  CHECK(b.percent[kOverhead] == doctest::Approx(2.5));
  double sum = 0.0;
  for (double p : b.percent) sum += p;
  CHECK(sum == doctest::Approx(100.0));
}

TEST_CASE("phase breakdown rejects malformed traces") {
  ExecutionTrace none("x");
  none.add({0, "ReducePrep", "", "ok", 1000});
  CHECK_THROWS_AS(phase_breakdown(none), InvalidArgument);
  CHECK_THROWS_AS(phase_breakdown(trace_of({0, 0, 0, 0, 0}, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(phase_breakdown(trace_of({1, 1, 1, 1, 1}, 4.0)), InvalidArgument);
  CHECK_THROWS_AS(phase_breakdown(trace_of({1, 1, 1, 1, 1}, 0.0)), InvalidArgument);
}

TEST_CASE("the first timing row converts to its reference shares") {
  const auto b = phase_breakdown(trace_of({92.19, 0.84, 1.13, 14.13, 0.98}, 109.64));
  const std::array<double, 6> reference{84.1, 0.8, 1.0, 12.9, 0.9, 0.1};
  for (std::size_t i = 0; i < reference.size(); ++i) CHECK(std::abs(b.percent[i] - reference[i]) <= 0.3);
  CHECK(b.seconds[kOverhead] == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("scenario json round-trips and builtins match the table") {
  for (int n = 1; n <= 6; ++n) {
    const auto sc = builtin_scenario(n);
    const auto back = ScenarioConfig::from_json(sc.to_json());
    CHECK(back.to_json() == sc.to_json());
  }
  CHECK(builtin_scenario(1).ingest_threads == 1);
  CHECK(builtin_scenario(2).ingest_threads == 2);
  CHECK(builtin_scenario(3).memory.ingest == 3072);
  CHECK(builtin_scenario(4).memory.map == 1024);
  CHECK(builtin_scenario(5).files == 12);
  CHECK(builtin_scenario(6).shuffle == storage::ShuffleBackend::kv);
  CHECK(builtin_scenario(6).throttle.enabled);
  CHECK_THROWS_AS(builtin_scenario(7), InvalidArgument);

  auto partial = ScenarioConfig::from_json(nlohmann::json{{"scenario", 2}}, builtin_scenario(5));
  CHECK(partial.files == 12);
  auto bad = builtin_scenario(1);
  bad.ingest_threads = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("a small job ranks the generated ledger on both backends") {
  for (auto backend : {storage::ShuffleBackend::object, storage::ShuffleBackend::kv}) {
    Environment env(small(backend));
    data::Ledger ledger;
    const auto files = load(env, 3, 3000, ledger);
    const auto r = env.run_job(files);
    REQUIRE(r.status == JobStatus::succeeded);
    CHECK(r.ranking == ledger.ranking(10));
    CHECK(r.records_ingested == ledger.valid());
    CHECK(r.invalid_rows == ledger.invalid);
    CHECK(r.gate.passed);
    CHECK_FALSE(r.gate.overridden);
    CHECK(r.gate.mapped == ledger.valid());
    CHECK(r.warnings.empty());

    std::size_t aggregate_spans = 0;
    for (const auto& e : r.trace.events()) {
      if (e.state == "ParallelReduceAggregate" && !e.instance_id.empty()) ++aggregate_spans;
    }
    CHECK(aggregate_spans == r.partitions.size());
    CHECK(r.partitions.size() == ledger.carriers.size());

    const auto& gate = state_span(r, "ReduceGate");
    for (const auto& e : r.trace.events()) {
      if (e.state == "ParallelReduceAggregate") CHECK(e.timestamp >= gate.timestamp + gate.duration);
    }
    core::VirtualTime prev_end = 0;
    for (const auto& st : default_definition().states) {
      const auto& span = state_span(r, st.name);
      CHECK(span.timestamp >= prev_end);
      prev_end = span.timestamp + span.duration;
    }
    CHECK(pipeline::gate_ordering_holds(env.services().audit, r.execution_id));

    const auto b = phase_breakdown(r.trace);
    double sum = 0.0;
    for (double p : b.percent) sum += p;
    CHECK(std::abs(sum - 100.0) <= 0.5);
  }
}

TEST_CASE("input without valid rows fails as empty input") {
  Environment env(builtin_scenario(1));
  env.services().raw.put("flights_00.csv", "UniqueCarrier,ArrDelay,Cancelled\nAA,NA,0\n??,3,0\n");
  const auto r = env.run_job({"flights_00.csv"});
  CHECK(r.status == JobStatus::failed);
  CHECK(r.message.rfind("empty input", 0) == 0);
  CHECK(r.ranking.entries.empty());
}

TEST_CASE("a job with no files is rejected") {
  Environment env(builtin_scenario(1));
  CHECK_THROWS_AS(env.run_job({}), InvalidArgument);
}
