#include "microreduce/workflow/trace.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include "microreduce/core/errors.hpp"

namespace microreduce::workflow {

void ExecutionTrace::add(TraceEvent event) {
  const auto pos = std::upper_bound(events_.begin(), events_.end(), event.timestamp,
                                    [](core::VirtualTime t, const TraceEvent& e) { return t < e.timestamp; });
  events_.insert(pos, std::move(event));
}

std::string format_ms(core::VirtualTime micros) {
  const bool negative = micros < 0;
  const auto abs = negative ? -micros : micros;
  std::string frac = std::to_string(abs % 1000);
  frac.insert(0, 3 - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(abs / 1000) + "." + frac;
}

core::VirtualTime parse_ms(std::string_view text) {
  const bool negative = text.starts_with('-');
  if (negative) text.remove_prefix(1);
  const auto dot = text.find('.');
  const auto whole_part = text.substr(0, dot);
  std::string frac(dot == std::string_view::npos ? "" : text.substr(dot + 1));
  if (whole_part.empty() || frac.size() > 3) throw InvalidArgument("bad millisecond value '" + std::string(text) + "'");
  frac.append(3 - frac.size(), '0');
  core::VirtualTime whole = 0;
  core::VirtualTime part = 0;
  auto [p1, e1] = std::from_chars(whole_part.data(), whole_part.data() + whole_part.size(), whole);
  auto [p2, e2] = std::from_chars(frac.data(), frac.data() + frac.size(), part);
  if (e1 != std::errc{} || p1 != whole_part.data() + whole_part.size() || e2 != std::errc{} ||
      p2 != frac.data() + frac.size()) {
    throw InvalidArgument("bad millisecond value '" + std::string(text) + "'");
  }
  const core::VirtualTime v = whole * 1000 + part;
  return negative ? -v : v;
}

void ExecutionTrace::write_csv(std::ostream& out) const {
  out << kTraceHeader << '\n';
  for (const auto& e : events_) {
    out << format_ms(e.timestamp) << ',' << e.state << ',' << e.instance_id << ',' << e.outcome << ','
        << format_ms(e.duration) << '\n';
  }
}

ExecutionTrace ExecutionTrace::read_csv(std::istream& in, std::string execution_id) {
  ExecutionTrace trace(std::move(execution_id));
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw InvalidArgument("trace: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 5) throw InvalidArgument("trace: expected 5 fields in '" + line + "'");
    trace.add({parse_ms(f[0]), f[1], f[2], f[3], parse_ms(f[4])});
  }
  return trace;
}

Phase phase_of_state(std::string_view state) {
  if (state == "ParallelIngest" || state == "Ingest") return kIngest;
  if (state == "ReducePrep") return kReducePrep;
  if (state == "ReduceGate") return kReduceGate;
  if (state == "ParallelReduceAggregate" || state == "ReduceAggregate") return kReduceAggregate;
  if (state == "ReduceRank") return kReduceRank;
  return kPhaseCount;
}

PhaseBreakdown phase_breakdown(const ExecutionTrace& trace) {
  std::array<core::VirtualTime, kPhaseCount> micros{};
  bool has_total = false;
  for (const auto& e : trace.events()) {
    if (!e.instance_id.empty()) continue;
    if (e.state == kExecutionSpan) {
      micros[kTotal] += e.duration;
      has_total = true;
      continue;
    }
    const Phase p = phase_of_state(e.state);
    if (p != kPhaseCount) micros[p] += e.duration;
  }
  if (!has_total || micros[kTotal] <= 0) throw InvalidArgument("trace has no positive Execution span");
  core::VirtualTime named = 0;
  for (int p = kIngest; p < kOverhead; ++p) {
    if (micros[p] < 0) throw InvalidArgument("trace has a negative phase duration");
    named += micros[p];
  }
  if (named == 0) throw InvalidArgument("inconsistent trace: no phase time recorded");
  if (named > micros[kTotal]) throw InvalidArgument("inconsistent trace: phases exceed the execution total");
  micros[kOverhead] = micros[kTotal] - named;

  PhaseBreakdown out;
  for (int p = 0; p < kPhaseCount; ++p) out.seconds[p] = static_cast<double>(micros[p]) / 1e6;
  for (int p = 0; p < kTotal; ++p) {
    out.percent[p] = static_cast<double>(micros[p]) / static_cast<double>(micros[kTotal]) * 100.0;
  }
  return out;
}

}  // namespace microreduce::workflow
