#include "microreduce/core/serialize.hpp"

#include "microreduce/core/errors.hpp"

namespace microreduce::core {

using nlohmann::json;

json to_json(const FlightRecord& record) {
  json j{{"carrier", record.carrier}, {"arr_delay_min", record.arr_delay_min}, {"valid", record.valid}};
  if (!record.extra.empty()) j["extra"] = record.extra;
  return j;
}

FlightRecord flight_record_from_json(const json& j) {
  FlightRecord record;
  record.carrier = j.at("carrier").get<std::string>();
  record.arr_delay_min = j.at("arr_delay_min").get<std::int64_t>();
  record.valid = j.at("valid").get<bool>();
  if (j.contains("extra")) record.extra = j.at("extra").get<std::vector<std::string>>();
  return record;
}

std::string encode_micro_batch(const MicroBatch& batch) {
  json records = json::array();
  for (const auto& record : batch.records) records.push_back(to_json(record));
  json body{{"execution_id", batch.execution_id.str()},
            {"seq", batch.seq},
            {"source_file", batch.source_file},
            {"records", std::move(records)}};
  return body.dump();
}

MicroBatch decode_micro_batch(std::string_view body) {
  try {
    const json j = json::parse(body);
    MicroBatch batch{ExecutionId::parse(j.at("execution_id").get<std::string>()),
                     j.at("seq").get<std::size_t>(), j.at("source_file").get<std::string>(), {}};
    const auto& records = j.at("records");
    batch.records.reserve(records.size());
    for (const auto& r : records) batch.records.push_back(flight_record_from_json(r));
    return batch;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed micro-batch body: ") + e.what());
  }
}

ExecutionId peek_execution_id(std::string_view body) {
  // Keys are dumped in sorted order, so the id is the first member.
  constexpr std::string_view lead = R"({"execution_id":")";
  if (body.starts_with(lead) && body.size() >= lead.size() + 36) {
    return ExecutionId::parse(body.substr(lead.size(), 36));
  }
  return decode_micro_batch(body).execution_id;
}

json to_json(const RankingResult& ranking) {
  json out = json::array();
  for (const auto& entry : ranking.entries) {
    out.push_back(json{{"carrier", entry.carrier}, {"on_time_performance", entry.on_time_performance}});
  }
  return out;
}

RankingResult ranking_from_json(const json& j, std::size_t limit) {
  RankingResult result;
  result.limit = limit;
  for (const auto& entry : j) {
    result.entries.push_back({entry.at("carrier").get<std::string>(), entry.at("on_time_performance").get<double>()});
  }
  return result;
}

}  // namespace microreduce::core
