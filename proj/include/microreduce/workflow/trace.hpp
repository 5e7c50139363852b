#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "microreduce/core/clock.hpp"

namespace microreduce::workflow {

/// One span. State-level spans have an empty instance_id; invocation spans
/// carry the invocation's instance id.
struct TraceEvent {
  core::VirtualTime timestamp = 0;
  std::string state;
  std::string instance_id;
  std::string outcome;
  core::VirtualTime duration = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline constexpr std::string_view kExecutionSpan = "Execution";
inline constexpr const char* kTraceHeader = "timestamp_ms,state,instance_id,outcome,duration_ms";

class ExecutionTrace {
 public:
  ExecutionTrace() = default;
  explicit ExecutionTrace(std::string execution_id) : execution_id_(std::move(execution_id)) {}

  const std::string& execution_id() const { return execution_id_; }
  void add(TraceEvent event);
  /// Ordered by timestamp, then insertion.
  const std::vector<TraceEvent>& events() const { return events_; }

  /// Milliseconds with three decimals (exact microseconds).
  void write_csv(std::ostream& out) const;
  static ExecutionTrace read_csv(std::istream& in, std::string execution_id = {});

 private:
  std::string execution_id_;
  std::vector<TraceEvent> events_;
};

/// "12.345" for 12345 microseconds.
std::string format_ms(core::VirtualTime micros);
core::VirtualTime parse_ms(std::string_view text);

enum Phase { kIngest, kReducePrep, kReduceGate, kReduceAggregate, kReduceRank, kOverhead, kTotal, kPhaseCount };

inline constexpr std::array<std::string_view, kPhaseCount> kPhaseNames{
    "Ingest", "ReducePrep", "ReduceGate", "ReduceAggregate", "ReduceRank", "Overhead", "Total"};

/// Phase a state-level span counts towards, or kPhaseCount if none.
Phase phase_of_state(std::string_view state);

struct PhaseBreakdown {
  std::array<double, kPhaseCount> seconds{};
  /// Every phase except Total, as a share of Total.
  std::array<double, kTotal> percent{};
};

/// Sums state-level spans per phase; Total is the Execution span and
/// Overhead = Total - sum of named phases. Throws InvalidArgument when the
/// Execution span is missing or non-positive, when no named phase has time,
/// or when the named phases exceed Total.
PhaseBreakdown phase_breakdown(const ExecutionTrace& trace);

}  // namespace microreduce::workflow
