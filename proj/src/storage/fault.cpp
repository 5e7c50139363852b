#include "microreduce/storage/fault.hpp"

#include "microreduce/core/errors.hpp"

namespace microreduce::storage {

FaultInjector::FaultInjector(FaultPolicy policy) : policy_(policy), rng_(policy.seed) {
  if (policy.rate < 0.0 || policy.rate > 1.0) throw InvalidArgument("fault rate must lie in [0, 1]");
}

bool FaultInjector::should_fail() {
  if (policy_.rate <= 0.0) return false;
  if (policy_.rate >= 1.0) return true;
  std::lock_guard lock(mu_);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < policy_.rate;
}

}  // namespace microreduce::storage
