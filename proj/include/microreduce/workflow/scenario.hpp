#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "microreduce/runtime/runtime.hpp"
#include "microreduce/storage/kv_store.hpp"
#include "microreduce/storage/queue.hpp"
#include "microreduce/storage/shuffle_port.hpp"

namespace microreduce::workflow {

struct MemoryConfig {
  int ingest = 2048;
  int map = 128;
  int reduce_prep = 128;
  int reduce1 = 10240;
  int reduce2 = 128;
};

/// Everything that parameterizes one job run.
struct ScenarioConfig {
  std::string name = "custom";
  storage::ShuffleBackend shuffle = storage::ShuffleBackend::object;
  std::size_t files = 1;
  int ingest_threads = 1;
  MemoryConfig memory;
  std::int64_t timeout_ms = runtime::kMaxTimeoutMs;
  std::size_t batch_size = 100;
  /// Carry the passthrough CSV columns through the queue.
  bool retain_source_fields = false;
  /// Messages per map invocation.
  std::size_t map_batch_size = 1;
  storage::ThrottlePolicy throttle;
  double shuffle_fault_rate = 0.0;
  double map_failure_rate = 0.0;
  storage::QueuePolicy queue;
  runtime::RuntimeLimits limits;
  double gate_poll_interval_ms = 1000.0;
  int gate_max_attempts = 300;
  bool override_gate = false;
  std::size_t ranking_limit = 10;
  std::uint64_t seed = 1;
  /// Randomizes the order of same-instant events.
  std::optional<std::uint64_t> interleave_seed;

  /// Throws InvalidArgument when a field is outside its domain.
  void validate() const;

  runtime::FunctionConfig function(std::string_view name) const;

  nlohmann::json to_json() const;
  /// Missing keys keep the values already in `base`.
  static ScenarioConfig from_json(const nlohmann::json& j, ScenarioConfig base);
  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig load(const std::filesystem::path& path);
};

/// Scenarios 1-6 of the configuration table.
ScenarioConfig builtin_scenario(int number);

/// Token-bucket setting for scenario 6, from `microreduce calibrate-throttle`
/// on 12 files x 25000 rows (data seed 1): 6.09% of records dead-lettered.
inline constexpr double kScenario6SustainedOps = 1550.0;
inline constexpr double kScenario6Burst = 1000.0;

}  // namespace microreduce::workflow
