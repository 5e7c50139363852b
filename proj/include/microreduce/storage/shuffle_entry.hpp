#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "microreduce/core/execution_id.hpp"
#include "microreduce/core/records.hpp"

namespace microreduce::storage {

/// Output of one map invocation for one partition key.
struct ShuffleEntry {
  core::ExecutionId execution_id;
  std::string partition_key;
  std::string instance_id;
  std::int64_t delay_sum = 0;
  std::int64_t count = 0;
  /// Only present when the map function was asked to retain source rows.
  std::optional<std::vector<core::FlightRecord>> rows;

  friend bool operator==(const ShuffleEntry&, const ShuffleEntry&) = default;
};

/// {"execution_id", "partition_key", "instance_id", "delay_sum", "count"} in that
/// order, plus "rows" when retained.
std::string to_json(const ShuffleEntry& entry);
ShuffleEntry shuffle_entry_from_json(std::string_view body);

}  // namespace microreduce::storage
