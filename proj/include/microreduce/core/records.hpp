#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "microreduce/core/execution_id.hpp"

namespace microreduce::core {

/// One parsed row of the airline on-time CSV.
struct FlightRecord {
  std::string carrier;
  std::int64_t arr_delay_min = 0;
  /// False when the delay is missing or non-numeric, or the flight was cancelled.
  bool valid = false;
  /// Retained passthrough columns, in CsvSchema::passthrough order.
  std::vector<std::string> extra;

  friend bool operator==(const FlightRecord&, const FlightRecord&) = default;
};

inline constexpr std::size_t kDefaultBatchSize = 100;

/// An execution-scoped slice of at most batch_size records; the unit of queue
/// transport and map work.
struct MicroBatch {
  ExecutionId execution_id;
  std::size_t seq = 0;
  std::string source_file;
  std::vector<FlightRecord> records;

  friend bool operator==(const MicroBatch&, const MicroBatch&) = default;
};

struct JobCounters {
  ExecutionId id;
  std::int64_t ingested = 0;
  std::int64_t mapped = 0;
};

enum class CounterField { ingested, mapped };

struct CarrierAggregate {
  std::string carrier;
  std::int64_t delay_sum = 0;
  std::int64_t count = 0;

  friend bool operator==(const CarrierAggregate&, const CarrierAggregate&) = default;
};

struct RankingEntry {
  std::string carrier;
  double on_time_performance = 0.0;

  friend bool operator==(const RankingEntry&, const RankingEntry&) = default;
};

inline constexpr std::size_t kDefaultRankingLimit = 10;

struct RankingResult {
  std::vector<RankingEntry> entries;
  std::size_t limit = kDefaultRankingLimit;

  friend bool operator==(const RankingResult&, const RankingResult&) = default;
};

}  // namespace microreduce::core
