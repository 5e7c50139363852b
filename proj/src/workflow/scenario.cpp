#include "microreduce/workflow/scenario.hpp"

#include <fstream>

#include "microreduce/core/errors.hpp"

namespace microreduce::workflow {

using nlohmann::json;

void ScenarioConfig::validate() const {
  if (files == 0) throw InvalidArgument("scenario: files must be positive");
  if (batch_size == 0) throw InvalidArgument("scenario: batch_size must be positive");
  if (map_batch_size == 0) throw InvalidArgument("scenario: map_batch_size must be positive");
  if (ranking_limit == 0) throw InvalidArgument("scenario: ranking_limit must be positive");
  if (!(map_failure_rate >= 0.0 && map_failure_rate <= 1.0)) throw InvalidArgument("scenario: map_failure_rate outside [0, 1]");
  if (!(shuffle_fault_rate >= 0.0 && shuffle_fault_rate <= 1.0)) {
    throw InvalidArgument("scenario: shuffle_fault_rate outside [0, 1]");
  }
  if (throttle.enabled && (throttle.sustained_ops_per_sec < 0.0 || throttle.burst_capacity < 0.0)) {
    throw InvalidArgument("scenario: throttle rates must be non-negative");
  }
  if (gate_max_attempts < 1 || gate_poll_interval_ms < 0.0) throw InvalidArgument("scenario: bad gate settings");
  if (queue.max_receives < 1 || queue.visibility_timeout_ms < 0.0) throw InvalidArgument("scenario: bad queue policy");
  for (const char* fn : {"ingest", "map", "reduce_prep", "reduce1", "reduce2"}) function(fn).validate();
}

runtime::FunctionConfig ScenarioConfig::function(std::string_view name) const {
  runtime::FunctionConfig fn;
  fn.name = std::string(name);
  fn.timeout_ms = timeout_ms;
  if (name == "ingest") {
    fn.memory_mb = memory.ingest;
    fn.workers = ingest_threads;
  } else if (name == "map") {
    fn.memory_mb = memory.map;
  } else if (name == "reduce_prep") {
    fn.memory_mb = memory.reduce_prep;
  } else if (name == "reduce1") {
    fn.memory_mb = memory.reduce1;
  } else if (name == "reduce2") {
    fn.memory_mb = memory.reduce2;
  } else {
    throw InvalidArgument("unknown function " + fn.name);
  }
  return fn;
}

json ScenarioConfig::to_json() const {
  json j{{"name", name},
         {"shuffle", std::string(storage::to_string(shuffle))},
         {"files", files},
         {"threads", ingest_threads},
         {"memory",
          {{"ingest", memory.ingest},
           {"map", memory.map},
           {"reduce_prep", memory.reduce_prep},
           {"reduce1", memory.reduce1},
           {"reduce2", memory.reduce2}}},
         {"timeout_ms", timeout_ms},
         {"batch_size", batch_size},
         {"map_batch_size", map_batch_size},
         {"retain_source_fields", retain_source_fields},
         {"throttle",
          {{"enabled", throttle.enabled},
           {"sustained_ops_per_sec", throttle.sustained_ops_per_sec},
           {"burst_capacity", throttle.burst_capacity}}},
         {"shuffle_fault_rate", shuffle_fault_rate},
         {"map_failure_rate", map_failure_rate},
         {"queue", {{"visibility_timeout_ms", queue.visibility_timeout_ms}, {"max_receives", queue.max_receives}}},
         {"limits",
          {{"account_concurrency", limits.account_concurrency},
           {"queue_scale_per_min", limits.queue_scale_per_min},
           {"queue_scale_cap", limits.queue_scale_cap}}},
         {"gate", {{"poll_interval_ms", gate_poll_interval_ms}, {"max_attempts", gate_max_attempts}}},
         {"override_gate", override_gate},
         {"ranking_limit", ranking_limit},
         {"seed", seed}};
  j["interleave_seed"] = interleave_seed ? json(*interleave_seed) : json(nullptr);
  j["queue_shuffle_seed"] = queue.shuffle_seed ? json(*queue.shuffle_seed) : json(nullptr);
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j, ScenarioConfig c) {
  try {
    if (!j.is_object()) throw InvalidArgument("scenario: expected a JSON object");
    c.name = j.value("name", c.name);
    if (j.contains("shuffle")) c.shuffle = storage::parse_shuffle_backend(j.at("shuffle").get<std::string>());
    c.files = j.value("files", c.files);
    c.ingest_threads = j.value("threads", c.ingest_threads);
    if (j.contains("memory")) {
      const auto& m = j.at("memory");
      c.memory.ingest = m.value("ingest", c.memory.ingest);
      c.memory.map = m.value("map", c.memory.map);
      c.memory.reduce_prep = m.value("reduce_prep", c.memory.reduce_prep);
      c.memory.reduce1 = m.value("reduce1", c.memory.reduce1);
      c.memory.reduce2 = m.value("reduce2", c.memory.reduce2);
    }
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.map_batch_size = j.value("map_batch_size", c.map_batch_size);
    c.retain_source_fields = j.value("retain_source_fields", c.retain_source_fields);
    if (j.contains("throttle")) {
      const auto& t = j.at("throttle");
      c.throttle.enabled = t.value("enabled", c.throttle.enabled);
      c.throttle.sustained_ops_per_sec = t.value("sustained_ops_per_sec", c.throttle.sustained_ops_per_sec);
      c.throttle.burst_capacity = t.value("burst_capacity", c.throttle.burst_capacity);
    }
    c.shuffle_fault_rate = j.value("shuffle_fault_rate", c.shuffle_fault_rate);
    c.map_failure_rate = j.value("map_failure_rate", c.map_failure_rate);
    if (j.contains("queue")) {
      const auto& q = j.at("queue");
      c.queue.visibility_timeout_ms = q.value("visibility_timeout_ms", c.queue.visibility_timeout_ms);
      c.queue.max_receives = q.value("max_receives", c.queue.max_receives);
    }
    if (j.contains("limits")) {
      const auto& l = j.at("limits");
      c.limits.account_concurrency = l.value("account_concurrency", c.limits.account_concurrency);
      c.limits.queue_scale_per_min = l.value("queue_scale_per_min", c.limits.queue_scale_per_min);
      c.limits.queue_scale_cap = l.value("queue_scale_cap", c.limits.queue_scale_cap);
    }
    if (j.contains("gate")) {
      const auto& g = j.at("gate");
      c.gate_poll_interval_ms = g.value("poll_interval_ms", c.gate_poll_interval_ms);
      c.gate_max_attempts = g.value("max_attempts", c.gate_max_attempts);
    }
    c.override_gate = j.value("override_gate", c.override_gate);
    c.ranking_limit = j.value("ranking_limit", c.ranking_limit);
    c.seed = j.value("seed", c.seed);
    if (j.contains("interleave_seed")) {
      const auto& v = j.at("interleave_seed");
      c.interleave_seed = v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>());
    }
    if (j.contains("queue_shuffle_seed")) {
      const auto& v = j.at("queue_shuffle_seed");
      c.queue.shuffle_seed = v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>());
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) { return from_json(j, ScenarioConfig{}); }

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("scenario file " + path.string() + ": " + e.what());
  }
  ScenarioConfig base;
  if (j.contains("scenario")) base = builtin_scenario(j.at("scenario").get<int>());
  return from_json(j, base);
}

ScenarioConfig builtin_scenario(int number) {
  ScenarioConfig c;
  c.name = "scenario-" + std::to_string(number);
  switch (number) {
    case 1: c.files = 1; c.ingest_threads = 1; c.memory.ingest = 2048; c.memory.map = 128; break;
    case 2: c.files = 1; c.ingest_threads = 2; c.memory.ingest = 2048; c.memory.map = 128; break;
    case 3: c.files = 1; c.ingest_threads = 3; c.memory.ingest = 3072; c.memory.map = 128; break;
    case 4: c.files = 1; c.ingest_threads = 3; c.memory.ingest = 3072; c.memory.map = 1024; break;
    case 5: c.files = 12; c.ingest_threads = 3; c.memory.ingest = 3072; c.memory.map = 1024; break;
    case 6:
      c.files = 12;
      c.ingest_threads = 3;
      c.memory.ingest = 3072;
      c.memory.map = 1024;
      c.shuffle = storage::ShuffleBackend::kv;
      c.throttle = {kScenario6SustainedOps, kScenario6Burst, true};
      break;
    default: throw InvalidArgument("unknown scenario " + std::to_string(number) + " (expected 1-6)");
  }
  c.memory.reduce1 = 10240;
  c.memory.reduce2 = 128;
  c.validate();
  return c;
}

}  // namespace microreduce::workflow
