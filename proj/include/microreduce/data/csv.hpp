#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "microreduce/core/records.hpp"

namespace microreduce::data {

struct CsvSchema {
  static constexpr std::array<std::string_view, 3> required{"UniqueCarrier", "ArrDelay", "Cancelled"};
  static constexpr std::array<std::string_view, 7> passthrough{"Year",   "Month",      "DayofMonth", "Origin",
                                                               "Dest", "CRSArrTime", "ArrTime"};
};

struct ParseStats {
  std::size_t total_rows = 0;
  std::size_t valid_rows = 0;
  std::size_t invalid_rows = 0;
};

struct ParseResult {
  std::vector<core::FlightRecord> records;
  ParseStats stats;
};

struct ParseOptions {
  bool keep_passthrough = true;
  bool keep_invalid = true;
};

/// Splits one RFC 4180 record into fields. Returns false for an unterminated
/// quote or stray characters after a closing quote.
bool split_csv_line(std::string_view line, std::vector<std::string>& fields);

/// Streams rows of a comma-separated file with a header line. Rows are
/// separated by LF (a trailing CR is dropped); quoted fields may not span
/// lines. Throws InvalidArgument when the header is absent or lacks a
/// required column. Malformed rows come back as invalid records.
void for_each_record(std::string_view bytes, const ParseOptions& options,
                     const std::function<void(core::FlightRecord&&)>& sink, ParseStats& stats);

ParseResult parse_csv(std::string_view bytes, const ParseOptions& options = {});

/// Parses "15", "-3.00", "2.5e1"; rounds to the nearest integer. Rejects blanks,
/// "NA", and anything not entirely numeric.
bool parse_minutes(std::string_view text, std::int64_t& out);

/// [A-Z0-9]{2,3}
bool is_carrier_code(std::string_view text);

}  // namespace microreduce::data
