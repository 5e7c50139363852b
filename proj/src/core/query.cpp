#include "microreduce/core/query.hpp"

#include <algorithm>

#include "microreduce/core/errors.hpp"

namespace microreduce::core {

namespace {

__extension__ typedef __int128 Int128;

void require_rows(const CarrierAggregate& agg) {
  if (agg.count < 1) {
    throw DegenerateAggregateError("aggregate for carrier '" + agg.carrier + "' has no rows");
  }
}

}  // namespace

double on_time_performance(const CarrierAggregate& agg) {
  require_rows(agg);
  return static_cast<double>(agg.delay_sum) / static_cast<double>(agg.count);
}

bool performs_better(const CarrierAggregate& lhs, const CarrierAggregate& rhs) {
  // a/b < c/d  <=>  a*d < c*b  for positive b, d.
  const Int128 left = static_cast<Int128>(lhs.delay_sum) * rhs.count;
  const Int128 right = static_cast<Int128>(rhs.delay_sum) * lhs.count;
  return left < right;
}

RankingResult rank_carriers(std::vector<CarrierAggregate> aggs, std::size_t limit) {
  for (const auto& agg : aggs) require_rows(agg);
  std::sort(aggs.begin(), aggs.end(), [](const CarrierAggregate& a, const CarrierAggregate& b) {
    if (performs_better(a, b)) return true;
    if (performs_better(b, a)) return false;
    return a.carrier < b.carrier;
  });

  RankingResult result;
  result.limit = limit;
  const std::size_t keep = std::min(limit, aggs.size());
  result.entries.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    result.entries.push_back({aggs[i].carrier, on_time_performance(aggs[i])});
  }
  return result;
}

void merge_into(CarrierAggregate& into, const CarrierAggregate& delta) {
  if (into.carrier != delta.carrier) {
    throw InvalidArgument("cannot merge carrier '" + delta.carrier + "' into '" + into.carrier + "'");
  }
  into.delay_sum += delta.delay_sum;
  into.count += delta.count;
}

std::map<std::string, CarrierAggregate> group_by_carrier(std::span<const FlightRecord> records) {
  std::map<std::string, CarrierAggregate> groups;
  for (const auto& record : records) {
    if (!passes_query_filter(record)) continue;
    auto [it, inserted] = groups.try_emplace(record.carrier, CarrierAggregate{record.carrier, 0, 0});
    it->second.delay_sum += record.arr_delay_min;
    it->second.count += 1;
  }
  return groups;
}

}  // namespace microreduce::core
