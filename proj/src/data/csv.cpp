#include "microreduce/data/csv.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

#include "microreduce/core/errors.hpp"

namespace microreduce::data {

namespace {

std::string_view next_line(std::string_view& rest) {
  const auto nl = rest.find('\n');
  std::string_view line = rest.substr(0, nl);
  rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

struct Columns {
  std::size_t carrier;
  std::size_t delay;
  std::size_t cancelled;
  std::array<std::optional<std::size_t>, CsvSchema::passthrough.size()> passthrough;
};

Columns resolve(const std::vector<std::string>& header) {
  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  std::array<std::size_t, 3> req{};
  for (std::size_t i = 0; i < CsvSchema::required.size(); ++i) {
    const auto at = find(CsvSchema::required[i]);
    if (!at) throw InvalidArgument("csv header lacks required column " + std::string(CsvSchema::required[i]));
    req[i] = *at;
  }
  Columns c{req[0], req[1], req[2], {}};
  for (std::size_t i = 0; i < CsvSchema::passthrough.size(); ++i) c.passthrough[i] = find(CsvSchema::passthrough[i]);
  return c;
}

}  // namespace

bool split_csv_line(std::string_view line, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  std::size_t i = 0;
  while (true) {
    field.clear();
    if (i < line.size() && line[i] == '"') {
      ++i;
      while (true) {
        if (i >= line.size()) return false;
        const char c = line[i++];
        if (c != '"') {
          field.push_back(c);
        } else if (i < line.size() && line[i] == '"') {
          field.push_back('"');
          ++i;
        } else {
          break;
        }
      }
      if (i < line.size() && line[i] != ',') return false;
    } else {
      const auto comma = line.find(',', i);
      const auto end = comma == std::string_view::npos ? line.size() : comma;
      field.assign(line.substr(i, end - i));
      if (field.find('"') != std::string::npos) return false;
      i = end;
    }
    fields.push_back(field);
    if (i >= line.size()) return true;
    ++i;  // comma
  }
}

bool parse_minutes(std::string_view text, std::int64_t& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const char c0 = text.empty() ? '\0' : text.front();
  if (!((c0 >= '0' && c0 <= '9') || c0 == '-' || c0 == '.')) return false;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return false;
  if (std::fabs(value) > 1e15) return false;
  out = std::llround(value);
  return true;
}

bool is_carrier_code(std::string_view text) {
  if (text.size() < 2 || text.size() > 3) return false;
  for (char c : text) {
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'))) return false;
  }
  return true;
}

void for_each_record(std::string_view bytes, const ParseOptions& options,
                     const std::function<void(core::FlightRecord&&)>& sink, ParseStats& stats) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  std::string_view rest = bytes;
  std::vector<std::string> fields;
  std::optional<Columns> cols;
  while (!rest.empty() && !cols) {
    const auto line = next_line(rest);
    if (line.empty()) continue;
    if (!split_csv_line(line, fields)) throw InvalidArgument("csv header is malformed");
    cols = resolve(fields);
  }
  if (!cols) throw InvalidArgument("csv input has no header");

  while (!rest.empty()) {
    const auto line = next_line(rest);
    if (line.empty()) continue;
    ++stats.total_rows;
    core::FlightRecord record;
    bool ok = split_csv_line(line, fields);
    const auto has = [&](std::size_t i) { return ok && i < fields.size(); };
    if (has(cols->carrier)) record.carrier = fields[cols->carrier];
    std::int64_t delay = 0;
    std::int64_t cancelled = 0;
    ok = ok && has(cols->delay) && has(cols->cancelled) && is_carrier_code(record.carrier) &&
         parse_minutes(fields[cols->delay], delay) && parse_minutes(fields[cols->cancelled], cancelled) &&
         cancelled == 0;
    record.valid = ok;
    if (ok) record.arr_delay_min = delay;
    if (ok) {
      ++stats.valid_rows;
    } else {
      ++stats.invalid_rows;
      if (!options.keep_invalid) continue;
    }
    if (options.keep_passthrough) {
      record.extra.reserve(cols->passthrough.size());
      for (const auto& at : cols->passthrough) record.extra.push_back(at && *at < fields.size() ? fields[*at] : "");
    }
    sink(std::move(record));
  }
}

ParseResult parse_csv(std::string_view bytes, const ParseOptions& options) {
  ParseResult result;
  for_each_record(
      bytes, options, [&](core::FlightRecord&& r) { result.records.push_back(std::move(r)); }, result.stats);
  return result;
}

}  // namespace microreduce::data
