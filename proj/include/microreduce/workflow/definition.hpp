#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace microreduce::workflow {

enum class StateKind { task, parallel_map, wait_loop };

std::string_view to_string(StateKind kind);

struct StateDef {
  std::string name;
  StateKind kind = StateKind::task;
  /// ingest | reduce_prep | gate | reduce1 | reduce2
  std::string target;
  /// files | partitions for parallel-map states, empty otherwise.
  std::string fanout;
  bool terminal = false;
};

inline constexpr std::size_t kDefaultPayloadLimitBytes = 262144;

/// Ordered state list read from a text file:
///
///   payload_limit_bytes 262144
///   retry 2 1000
///   state <name> <task|parallel-map|wait-loop> <target> <fanout|-> [end]
///
/// '#' starts a comment.
struct WorkflowDefinition {
  std::vector<StateDef> states;
  std::size_t payload_limit_bytes = kDefaultPayloadLimitBytes;
  int retries = 2;
  double retry_backoff_ms = 1000.0;

  /// Throws InvalidArgument unless there is exactly one terminal state (the
  /// last), every target appears at most once with its matching kind and
  /// fan-out, and ingest, gate, reduce1, reduce2 all appear in that order.
  void validate() const;

  std::string to_text() const;
  static WorkflowDefinition parse(std::string_view text);
  static WorkflowDefinition load(const std::filesystem::path& path);
};

/// ParallelIngest -> ReducePrep -> ReduceGate -> ParallelReduceAggregate -> ReduceRank
WorkflowDefinition default_definition();

}  // namespace microreduce::workflow
