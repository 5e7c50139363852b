#include "microreduce/storage/shuffle_entry.hpp"

#include <json.hpp>

#include "microreduce/core/errors.hpp"
#include "microreduce/core/serialize.hpp"

namespace microreduce::storage {

using ordered_json = nlohmann::ordered_json;

std::string to_json(const ShuffleEntry& entry) {
  ordered_json j;
  j["execution_id"] = entry.execution_id.str();
  j["partition_key"] = entry.partition_key;
  j["instance_id"] = entry.instance_id;
  j["delay_sum"] = entry.delay_sum;
  j["count"] = entry.count;
  if (entry.rows) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : *entry.rows) rows.push_back(ordered_json(core::to_json(row)));
    j["rows"] = std::move(rows);
  }
  return j.dump();
}

ShuffleEntry shuffle_entry_from_json(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    ShuffleEntry entry{core::ExecutionId::parse(j.at("execution_id").get<std::string>()),
                       j.at("partition_key").get<std::string>(),
                       j.at("instance_id").get<std::string>(),
                       j.at("delay_sum").get<std::int64_t>(),
                       j.at("count").get<std::int64_t>(),
                       std::nullopt};
    if (j.contains("rows")) {
      std::vector<core::FlightRecord> rows;
      for (const auto& r : j.at("rows")) rows.push_back(core::flight_record_from_json(r));
      entry.rows = std::move(rows);
    }
    return entry;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed shuffle entry: ") + e.what());
  }
}

}  // namespace microreduce::storage
