#pragma once

#include <cstdint>
#include <string>

namespace microreduce::runtime {

inline constexpr int kMinMemoryMb = 128;
inline constexpr int kMaxMemoryMb = 10240;
inline constexpr std::int64_t kMaxTimeoutMs = 900000;

struct FunctionConfig {
  std::string name;
  int memory_mb = 128;
  std::int64_t timeout_ms = kMaxTimeoutMs;
  /// Intra-invocation parallelism.
  int workers = 1;

  /// Throws InvalidArgument when memory, timeout, or workers are out of range.
  void validate() const;
};

/// vCPUs available at a memory setting: linear between the anchor points
/// (128, 1), (1024, 2), (2048, 2), (3072, 3), (10240, 6), rounded to nearest.
int vcpus(int memory_mb);

/// Amdahl speed-up of `workers` lanes on `vcpu` cores with parallel fraction p.
double effective_parallelism(int workers, int vcpu, double parallel_fraction);

}  // namespace microreduce::runtime
