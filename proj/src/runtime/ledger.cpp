#include "microreduce/runtime/ledger.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace microreduce::runtime {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view field, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw InvalidArgument(std::string("ledger: bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

void write_ledger_csv(std::ostream& out, const std::vector<InvocationRecord>& records) {
  out << kLedgerHeader << '\n';
  for (const auto& r : records) {
    out << r.function << ',' << r.execution_id << ',' << r.instance_id << ',' << (r.cold_start ? "true" : "false")
        << ',' << r.init_ms << ',' << r.duration_ms << ',' << format_double(r.billed_gb_ms) << ','
        << r.max_mem_used_mb << ',' << to_string(r.outcome) << '\n';
  }
}

std::vector<InvocationRecord> read_ledger_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("ledger: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLedgerHeader) throw InvalidArgument("ledger: unexpected header");
  std::vector<InvocationRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 9) throw InvalidArgument("ledger: expected 9 fields in '" + line + "'");
    InvocationRecord r;
    r.function = f[0];
    r.execution_id = f[1];
    r.instance_id = f[2];
    if (f[3] == "true") {
      r.cold_start = true;
    } else if (f[3] != "false") {
      throw InvalidArgument("ledger: bad cold_start '" + std::string(f[3]) + "'");
    }
    r.init_ms = parse_number<std::int64_t>(f[4], "init_ms");
    r.duration_ms = parse_number<std::int64_t>(f[5], "duration_ms");
    r.billed_gb_ms = parse_number<double>(f[6], "billed_gb_ms");
    r.max_mem_used_mb = parse_number<std::int64_t>(f[7], "max_mem_used_mb");
    r.outcome = parse_outcome(f[8]);
    if (r.duration_ms > 0) {
      r.memory_mb = static_cast<int>(std::lround(r.billed_gb_ms * 1024.0 / static_cast<double>(r.duration_ms)));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace microreduce::runtime
