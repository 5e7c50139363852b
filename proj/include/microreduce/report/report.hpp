#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "microreduce/runtime/runtime.hpp"
#include "microreduce/workflow/trace.hpp"

namespace microreduce::report {

/// Per-function invocation statistics.
struct FunctionKpi {
  std::string function;
  std::int64_t total_count = 0;
  std::int64_t init_count = 0;
  double avg_init_ms = 0.0;  ///< over cold starts only
  double avg_duration_ms = 0.0;
  double pct_init = 0.0;

  friend bool operator==(const FunctionKpi&, const FunctionKpi&) = default;
};

/// One row per function; pipeline functions first in pipeline order, then
/// any others by name. Independent of ledger row order.
std::vector<FunctionKpi> kpi_table(const std::vector<runtime::InvocationRecord>& ledger);

inline constexpr const char* kKpiHeader =
    "Function,Total Count,Init Count,Avg Init (ms),Avg Duration (ms),% Init";

void write_kpi_text(std::ostream& out, const std::vector<FunctionKpi>& rows);
void write_kpi_csv(std::ostream& out, const std::vector<FunctionKpi>& rows);

/// Mean number of executing invocations in each virtual second, from
/// start_ms over duration_ms (init excluded). sum(series) * 1000 equals the
/// total billed duration.
std::vector<double> concurrency_series(const std::vector<runtime::InvocationRecord>& ledger);
void write_concurrency_csv(std::ostream& out, const std::vector<double>& series);

/// Fills start_ms of ledger rows from the matching invocation
/// spans of a trace. Rows without a span keep start_ms = 0.
void attach_start_times(std::vector<runtime::InvocationRecord>& ledger, const workflow::ExecutionTrace& trace);

struct Rates {
  double price_per_gb_s = 0.0000166667;
  double request_price = 0.0000002;
  std::string currency = "USD";

  void validate() const;
  static Rates load(const std::string& path);
};

struct FunctionCost {
  std::string function;
  std::int64_t requests = 0;
  double billed_gb_s = 0.0;
  double amount = 0.0;
};

struct CostReport {
  Rates rates;
  std::vector<FunctionCost> functions;
  double total = 0.0;
};

CostReport cost_report(const std::vector<runtime::InvocationRecord>& ledger, const Rates& rates = {});
void write_cost_text(std::ostream& out, const CostReport& report);
void write_cost_csv(std::ostream& out, const CostReport& report);

inline constexpr const char* kPhaseSecondsHeader =
    "Scenario,Ingest (s),ReducePrep (s),ReduceGate (s),ReduceAggregate (s),ReduceRank (s),Overhead (s),Total (s)";
inline constexpr const char* kPhasePercentHeader =
    "Scenario,Ingest (%),ReducePrep (%),ReduceGate (%),ReduceAggregate (%),ReduceRank (%),Overhead (%)";

struct PhaseRow {
  std::string scenario;
  workflow::PhaseBreakdown breakdown;
};

void write_phase_seconds_text(std::ostream& out, const std::vector<PhaseRow>& rows);
void write_phase_seconds_csv(std::ostream& out, const std::vector<PhaseRow>& rows);
void write_phase_percent_text(std::ostream& out, const std::vector<PhaseRow>& rows);
void write_phase_percent_csv(std::ostream& out, const std::vector<PhaseRow>& rows);

/// Trace with one state span per named phase laid end to end and an
/// Execution span of total_s. Overhead is whatever the phases leave.
workflow::ExecutionTrace synthesize_trace(const std::array<double, workflow::kOverhead>& phase_seconds,
                                          double total_s);

}  // namespace microreduce::report
