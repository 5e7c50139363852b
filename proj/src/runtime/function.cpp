#include "microreduce/runtime/function.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "microreduce/core/errors.hpp"

namespace microreduce::runtime {

namespace {

constexpr std::array<std::pair<double, double>, 5> kVcpuAnchors{{
    {128.0, 1.0},
    {1024.0, 2.0},
    {2048.0, 2.0},
    {3072.0, 3.0},
    {10240.0, 6.0},
}};

}  // namespace

void FunctionConfig::validate() const {
  if (name.empty()) throw InvalidArgument("function name is empty");
  if (memory_mb < kMinMemoryMb || memory_mb > kMaxMemoryMb) {
    throw InvalidArgument("function " + name + ": memory_mb " + std::to_string(memory_mb) + " outside [128, 10240]");
  }
  if (timeout_ms <= 0 || timeout_ms > kMaxTimeoutMs) {
    throw InvalidArgument("function " + name + ": timeout_ms must be in (0, 900000]");
  }
  if (workers < 1 || workers > vcpus(memory_mb)) {
    throw InvalidArgument("function " + name + ": workers " + std::to_string(workers) + " exceeds " +
                          std::to_string(vcpus(memory_mb)) + " vCPUs at " + std::to_string(memory_mb) + " MB");
  }
}

int vcpus(int memory_mb) {
  if (memory_mb < kMinMemoryMb || memory_mb > kMaxMemoryMb) {
    throw InvalidArgument("memory_mb " + std::to_string(memory_mb) + " outside [128, 10240]");
  }
  const double m = memory_mb;
  for (std::size_t i = 1; i < kVcpuAnchors.size(); ++i) {
    const auto [x0, y0] = kVcpuAnchors[i - 1];
    const auto [x1, y1] = kVcpuAnchors[i];
    if (m <= x1) {
      const double y = y0 + (y1 - y0) * (m - x0) / (x1 - x0);
      return std::max(1, static_cast<int>(std::lround(y)));
    }
  }
  return static_cast<int>(kVcpuAnchors.back().second);
}

double effective_parallelism(int workers, int vcpu, double parallel_fraction) {
  if (workers < 1 || vcpu < 1) throw InvalidArgument("workers and vcpus must be positive");
  if (parallel_fraction < 0.0 || parallel_fraction > 1.0) throw InvalidArgument("parallel fraction outside [0, 1]");
  const double lanes = std::min(workers, vcpu);
  return 1.0 / ((1.0 - parallel_fraction) + parallel_fraction / lanes);
}

}  // namespace microreduce::runtime
