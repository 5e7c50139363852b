#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "microreduce/core/records.hpp"

namespace microreduce::core {

/// Row predicate of the on-time query: the delay is present and the flight was not cancelled.
inline bool passes_query_filter(const FlightRecord& record) { return record.valid && !record.carrier.empty(); }

/// delay_sum / count. Throws DegenerateAggregateError when count < 1.
double on_time_performance(const CarrierAggregate& agg);

/// Exact ordering on delay_sum / count without going through floating point.
/// Both aggregates must have count >= 1.
bool performs_better(const CarrierAggregate& lhs, const CarrierAggregate& rhs);

/// Sorts ascending by on-time performance (ties by carrier code) and keeps the first `limit`.
/// Aggregates with count < 1 are rejected with DegenerateAggregateError.
RankingResult rank_carriers(std::vector<CarrierAggregate> aggs, std::size_t limit = kDefaultRankingLimit);

/// Adds `delta` into `into`; carriers must match.
void merge_into(CarrierAggregate& into, const CarrierAggregate& delta);

/// Groups records passing the query filter by carrier.
std::map<std::string, CarrierAggregate> group_by_carrier(std::span<const FlightRecord> records);

}  // namespace microreduce::core
