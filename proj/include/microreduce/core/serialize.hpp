#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "microreduce/core/records.hpp"

namespace microreduce::core {

nlohmann::json to_json(const FlightRecord& record);
FlightRecord flight_record_from_json(const nlohmann::json& j);

/// Queue body encoding of a micro-batch.
std::string encode_micro_batch(const MicroBatch& batch);
MicroBatch decode_micro_batch(std::string_view body);
/// The execution id of an encoded micro-batch without decoding its records.
ExecutionId peek_execution_id(std::string_view body);

/// Ranking artifact: a JSON list of {carrier, on_time_performance}.
nlohmann::json to_json(const RankingResult& ranking);
RankingResult ranking_from_json(const nlohmann::json& j, std::size_t limit = kDefaultRankingLimit);

}  // namespace microreduce::core
