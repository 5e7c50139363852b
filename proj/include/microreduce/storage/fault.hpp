#pragma once

#include <cstdint>
#include <mutex>
#include <random>

namespace microreduce::storage {

struct FaultPolicy {
  double rate = 0.0;  ///< probability in [0, 1] that an operation fails
  std::uint64_t seed = 0;
};

/// Seeded Bernoulli failure source shared by the emulated services.
class FaultInjector {
 public:
  explicit FaultInjector(FaultPolicy policy = {});

  bool should_fail();
  bool enabled() const { return policy_.rate > 0.0; }
  const FaultPolicy& policy() const { return policy_; }

 private:
  FaultPolicy policy_;
  std::mt19937_64 rng_;
  std::mutex mu_;
};

}  // namespace microreduce::storage
