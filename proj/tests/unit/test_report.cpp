#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "microreduce/data/generator.hpp"
#include "microreduce/report/report.hpp"
#include "microreduce/workflow/orchestrator.hpp"
#include "support.hpp"

using namespace microreduce;
using namespace microreduce::report;
using runtime::InvocationRecord;

namespace {

struct TableRow {
  const char* function;
  int total;
  int init;
  double avg_init;
  double avg_duration;
  double pct_init;
};

constexpr TableRow kTableOne[] = {
    {"ingest", 78, 35, 853, 59110, 44.87},
    {"map", 560, 34, 811, 2719, 6.07},
    {"reduce1", 314, 125, 823, 20606, 39.81},
    {"reduce2", 21, 11, 860, 61, 52.38},
};

// Rows whose cold inits and durations average exactly to the table values.
std::vector<InvocationRecord> table_one_ledger() {
  std::vector<InvocationRecord> ledger;
  for (const auto& row : kTableOne) {
    for (int i = 0; i < row.total; ++i) {
      InvocationRecord r;
      r.function = row.function;
      r.cold_start = i < row.init;
      r.init_ms = r.cold_start ? static_cast<std::int64_t>(row.avg_init) + (i % 2 == 0 ? 7 : -7) : 0;
      if (r.cold_start && row.init % 2 == 1 && i == row.init - 1) r.init_ms = static_cast<std::int64_t>(row.avg_init);
      r.duration_ms = static_cast<std::int64_t>(row.avg_duration) + (i % 2 == 0 ? 5 : -5);
      if (row.total % 2 == 1 && i == row.total - 1) r.duration_ms = static_cast<std::int64_t>(row.avg_duration);
      r.memory_mb = 1024;
      r.billed_gb_ms = static_cast<double>(r.duration_ms);
      ledger.push_back(r);
    }
  }
  return ledger;
}

InvocationRecord rec(std::string fn, double start_ms, std::int64_t duration_ms, int memory_mb = 1024) {
  InvocationRecord r;
  r.function = std::move(fn);
  r.start_ms = start_ms;
  r.duration_ms = duration_ms;
  r.memory_mb = memory_mb;
  r.billed_gb_ms = memory_mb / 1024.0 * static_cast<double>(duration_ms);
  return r;
}

}  // namespace

TEST_CASE("kpi table reproduces the reference invocation statistics") {
  const auto rows = kpi_table(table_one_ledger());
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& want = kTableOne[i];
    CHECK(rows[i].function == want.function);
    CHECK(rows[i].total_count == want.total);
    CHECK(rows[i].init_count == want.init);
    CHECK(rows[i].avg_init_ms == doctest::Approx(want.avg_init));
    CHECK(rows[i].avg_duration_ms == doctest::Approx(want.avg_duration));
    CHECK(std::abs(rows[i].pct_init - want.pct_init) <= 0.01);
  }
  std::ostringstream csv;
  write_kpi_csv(csv, rows);
  CHECK(csv.str().rfind(std::string(kKpiHeader) + "\n", 0) == 0);
  CHECK(csv.str().find("ingest,78,35,853.00,59110.00,44.87") != std::string::npos);
}

TEST_CASE("kpi table does not depend on ledger order") {
  auto ledger = table_one_ledger();
  const auto expected = kpi_table(ledger);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(ledger.begin(), ledger.end(), rng);
    CHECK(kpi_table(ledger) == expected);
  }
  CHECK(kpi_table({}).empty());
}

TEST_CASE("concurrency integral equals total duration") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<InvocationRecord> ledger;
    std::int64_t total = 0;
    const auto n = testing::uniform(rng, 0, 40);
    for (int i = 0; i < n; ++i) {
      const auto start = static_cast<double>(testing::uniform(rng, 0, 20000));
      const auto d = testing::uniform(rng, 0, 9000);
      total += d;
      ledger.push_back(rec("map", start, d));
    }
    const auto series = concurrency_series(ledger);
    double sum = 0.0;
    for (double v : series) {
      CHECK(v >= 0.0);
      CHECK(v <= n);
      sum += v;
    }
    CHECK(sum * 1000.0 == doctest::Approx(static_cast<double>(total)));
  }
  const auto series = concurrency_series({rec("a", 500, 1000), rec("b", 0, 2000)});
  REQUIRE(series.size() == 2);
  CHECK(series[0] == doctest::Approx(1.5));
  CHECK(series[1] == doctest::Approx(1.5));
}

TEST_CASE("cost of an empty ledger is zero") {
  const auto c = cost_report({});
  CHECK(c.total == 0.0);
  CHECK(c.functions.empty());
}

TEST_CASE("cost of one 2 GB invocation for 10 s") {
  Rates rates;
  const auto c = cost_report({rec("reduce1", 0, 10000, 2048)}, rates);
  REQUIRE(c.functions.size() == 1);
  CHECK(c.functions[0].billed_gb_s == doctest::Approx(20.0));
  CHECK(c.total == doctest::Approx(20.0 * rates.price_per_gb_s + rates.request_price));
  std::ostringstream text;
  write_cost_text(text, c);
  CHECK(text.str().rfind("rates:", 0) == 0);

  Rates bad;
  bad.price_per_gb_s = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("phase tables use the reference headers") {
  std::vector<PhaseRow> rows{{"1", workflow::phase_breakdown(synthesize_trace({92.19, 0.84, 1.13, 14.13, 0.98}, 109.64))}};
  std::ostringstream secs, pct;
  write_phase_seconds_csv(secs, rows);
  write_phase_percent_csv(pct, rows);
  CHECK(secs.str() == std::string(kPhaseSecondsHeader) + "\n1,92.19,0.84,1.13,14.13,0.98,0.37,109.64\n");
  CHECK(pct.str() == std::string(kPhasePercentHeader) + "\n1,84.1,0.8,1.0,12.9,0.9,0.3\n");
}

TEST_CASE("start times are recovered from invocation spans") {
  workflow::ExecutionTrace t("e");
  t.add({core::ms_to_virtual(100), "Map", "07b8c1d8-4e89-4969-83f3-72df580132f9", "ok", core::ms_to_virtual(900)});
  std::vector<InvocationRecord> ledger{rec("map", 0, 50)};
  ledger[0].instance_id = "07b8c1d8-4e89-4969-83f3-72df580132f9";
  ledger[0].init_ms = 850;
  attach_start_times(ledger, t);
  CHECK(ledger[0].start_ms == doctest::Approx(950.0));
}

TEST_CASE("twelve files under scenario five cost more than one under scenario one") {
  double totals[2] = {0.0, 0.0};
  int i = 0;
  for (int n : {1, 5}) {
    workflow::Environment env(workflow::builtin_scenario(n));
    data::GenSpec spec;
    spec.files = env.scenario().files;
    spec.rows_per_file = 2000;
    const auto ds = data::generate_dataset(spec, env.services().raw);
    const auto r = env.run_job(ds.files);
    REQUIRE(r.status == workflow::JobStatus::succeeded);
    totals[i++] = cost_report(r.invocations).total;
  }
  CHECK(totals[1] > totals[0]);
}
