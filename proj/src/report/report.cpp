#include "microreduce/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "microreduce/core/errors.hpp"

namespace microreduce::report {

namespace {

constexpr std::array<std::string_view, 5> kPipelineOrder{"ingest", "map", "reduce_prep", "reduce1", "reduce2"};

std::size_t order_of(const std::string& function) {
  const auto it = std::find(kPipelineOrder.begin(), kPipelineOrder.end(), function);
  return static_cast<std::size_t>(it - kPipelineOrder.begin());
}

bool pipeline_less(const std::string& a, const std::string& b) {
  const auto oa = order_of(a);
  const auto ob = order_of(b);
  if (oa != ob) return oa < ob;
  return a < b;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string sci(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

using Table = std::vector<std::vector<std::string>>;

std::vector<std::string> split_header(std::string_view header) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto comma = header.find(',', begin);
    out.emplace_back(header.substr(begin, comma - begin));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

// First column left-aligned, the rest right-aligned.
void write_aligned(std::ostream& out, const Table& table) {
  if (table.empty()) return;
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c > 0) line += "  ";
      line += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
}

void write_csv(std::ostream& out, const Table& table) {
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

Table kpi_rows(const std::vector<FunctionKpi>& rows) {
  Table t{split_header(kKpiHeader)};
  for (const auto& k : rows) {
    t.push_back({k.function, std::to_string(k.total_count), std::to_string(k.init_count), fixed(k.avg_init_ms, 2),
                 fixed(k.avg_duration_ms, 2), fixed(k.pct_init, 2)});
  }
  return t;
}

Table seconds_rows(const std::vector<PhaseRow>& rows) {
  Table t{split_header(kPhaseSecondsHeader)};
  for (const auto& r : rows) {
    std::vector<std::string> line{r.scenario};
    for (double s : r.breakdown.seconds) line.push_back(fixed(s, 2));
    t.push_back(std::move(line));
  }
  return t;
}

Table percent_rows(const std::vector<PhaseRow>& rows) {
  Table t{split_header(kPhasePercentHeader)};
  for (const auto& r : rows) {
    std::vector<std::string> line{r.scenario};
    for (double p : r.breakdown.percent) line.push_back(fixed(p, 1));
    t.push_back(std::move(line));
  }
  return t;
}

Table cost_rows(const CostReport& report) {
  Table t{{"Function", "Requests", "Billed GB-s", "Amount (" + report.rates.currency + ")"}};
  for (const auto& f : report.functions) {
    t.push_back({f.function, std::to_string(f.requests), fixed(f.billed_gb_s, 3), fixed(f.amount, 8)});
  }
  std::int64_t requests = 0;
  double gb_s = 0.0;
  for (const auto& f : report.functions) {
    requests += f.requests;
    gb_s += f.billed_gb_s;
  }
  t.push_back({"total", std::to_string(requests), fixed(gb_s, 3), fixed(report.total, 8)});
  return t;
}

}  // namespace

std::vector<FunctionKpi> kpi_table(const std::vector<runtime::InvocationRecord>& ledger) {
  struct Acc {
    std::int64_t total = 0;
    std::int64_t init = 0;
    std::int64_t init_ms = 0;
    std::int64_t duration_ms = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& rec : ledger) {
    auto& a = acc[rec.function];
    ++a.total;
    a.duration_ms += rec.duration_ms;
    if (rec.cold_start) {
      ++a.init;
      a.init_ms += rec.init_ms;
    }
  }
  std::vector<FunctionKpi> rows;
  for (const auto& [name, a] : acc) {
    FunctionKpi k;
    k.function = name;
    k.total_count = a.total;
    k.init_count = a.init;
    k.avg_init_ms = a.init ? static_cast<double>(a.init_ms) / static_cast<double>(a.init) : 0.0;
    k.avg_duration_ms = static_cast<double>(a.duration_ms) / static_cast<double>(a.total);
    k.pct_init = static_cast<double>(a.init) / static_cast<double>(a.total) * 100.0;
    rows.push_back(std::move(k));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return pipeline_less(a.function, b.function); });
  return rows;
}

void write_kpi_text(std::ostream& out, const std::vector<FunctionKpi>& rows) { write_aligned(out, kpi_rows(rows)); }
void write_kpi_csv(std::ostream& out, const std::vector<FunctionKpi>& rows) { write_csv(out, kpi_rows(rows)); }

std::vector<double> concurrency_series(const std::vector<runtime::InvocationRecord>& ledger) {
  std::vector<double> series;
  for (const auto& rec : ledger) {
    if (rec.duration_ms <= 0) continue;
    const double begin = rec.start_ms;
    const double end = begin + static_cast<double>(rec.duration_ms);
    const auto first = static_cast<std::size_t>(std::floor(begin / 1000.0));
    const auto last = static_cast<std::size_t>(std::ceil(end / 1000.0));
    if (series.size() < last) series.resize(last, 0.0);
    for (std::size_t s = first; s < last; ++s) {
      const double lo = std::max(begin, static_cast<double>(s) * 1000.0);
      const double hi = std::min(end, static_cast<double>(s + 1) * 1000.0);
      if (hi > lo) series[s] += (hi - lo) / 1000.0;
    }
  }
  return series;
}

void write_concurrency_csv(std::ostream& out, const std::vector<double>& series) {
  out << "second,concurrency\n";
  for (std::size_t s = 0; s < series.size(); ++s) out << s << ',' << fixed(series[s], 3) << '\n';
}

void attach_start_times(std::vector<runtime::InvocationRecord>& ledger, const workflow::ExecutionTrace& trace) {
  std::unordered_map<std::string, const workflow::TraceEvent*> spans;
  for (const auto& e : trace.events()) {
    if (!e.instance_id.empty()) spans[e.instance_id] = &e;
  }
  for (auto& rec : ledger) {
    const auto it = spans.find(rec.instance_id);
    if (it == spans.end()) continue;
    rec.start_ms = core::virtual_to_ms(it->second->timestamp) + static_cast<double>(rec.init_ms);
  }
}

void Rates::validate() const {
  if (!(price_per_gb_s >= 0.0) || !(request_price >= 0.0)) throw InvalidArgument("rates must be non-negative");
}

Rates Rates::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read rates " + path);
  const auto j = nlohmann::json::parse(in);
  Rates r;
  r.price_per_gb_s = j.value("price_per_gb_s", r.price_per_gb_s);
  r.request_price = j.value("request_price", r.request_price);
  r.currency = j.value("currency", r.currency);
  r.validate();
  return r;
}

CostReport cost_report(const std::vector<runtime::InvocationRecord>& ledger, const Rates& rates) {
  rates.validate();
  std::map<std::string, FunctionCost> by_function;
  for (const auto& rec : ledger) {
    auto& f = by_function[rec.function];
    f.function = rec.function;
    ++f.requests;
    f.billed_gb_s += rec.billed_gb_ms / 1000.0;
  }
  CostReport report;
  report.rates = rates;
  for (auto& [name, f] : by_function) {
    f.amount = f.billed_gb_s * rates.price_per_gb_s + static_cast<double>(f.requests) * rates.request_price;
    report.total += f.amount;
    report.functions.push_back(f);
  }
  std::sort(report.functions.begin(), report.functions.end(),
            [](const auto& a, const auto& b) { return pipeline_less(a.function, b.function); });
  return report;
}

void write_cost_text(std::ostream& out, const CostReport& report) {
  out << "rates: " << sci(report.rates.price_per_gb_s) << ' ' << report.rates.currency << "/GB-s, "
      << sci(report.rates.request_price) << ' ' << report.rates.currency << "/request\n";
  write_aligned(out, cost_rows(report));
}

void write_cost_csv(std::ostream& out, const CostReport& report) {
  out << "# price_per_gb_s=" << sci(report.rates.price_per_gb_s) << " request_price=" << sci(report.rates.request_price)
      << " currency=" << report.rates.currency << '\n';
  write_csv(out, cost_rows(report));
}

void write_phase_seconds_text(std::ostream& out, const std::vector<PhaseRow>& rows) {
  write_aligned(out, seconds_rows(rows));
}
void write_phase_seconds_csv(std::ostream& out, const std::vector<PhaseRow>& rows) { write_csv(out, seconds_rows(rows)); }
void write_phase_percent_text(std::ostream& out, const std::vector<PhaseRow>& rows) {
  write_aligned(out, percent_rows(rows));
}
void write_phase_percent_csv(std::ostream& out, const std::vector<PhaseRow>& rows) { write_csv(out, percent_rows(rows)); }

workflow::ExecutionTrace synthesize_trace(const std::array<double, workflow::kOverhead>& phase_seconds,
                                          double total_s) {
  static constexpr std::array<const char*, workflow::kOverhead> kStates{
      "ParallelIngest", "ReducePrep", "ReduceGate", "ParallelReduceAggregate", "ReduceRank"};
  const auto micros = [](double s) { return static_cast<core::VirtualTime>(std::llround(s * 1e6)); };
  workflow::ExecutionTrace trace("fixture");
  trace.add({0, std::string(workflow::kExecutionSpan), "", "ok", micros(total_s)});
  core::VirtualTime at = 0;
  for (std::size_t i = 0; i < kStates.size(); ++i) {
    const auto d = micros(phase_seconds[i]);
    trace.add({at, kStates[i], "", "ok", d});
    at += d;
  }
  return trace;
}

}  // namespace microreduce::report
