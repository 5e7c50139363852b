#pragma once

#include <cmath>
#include <cstdint>

namespace microreduce::core {

/// Virtual time in microseconds since the start of a simulation.
using VirtualTime = std::int64_t;

inline constexpr VirtualTime kMicrosPerMs = 1000;

inline VirtualTime ms_to_virtual(double ms) { return static_cast<VirtualTime>(std::llround(ms * 1000.0)); }
inline double virtual_to_ms(VirtualTime t) { return static_cast<double>(t) / 1000.0; }

class Clock {
 public:
  virtual ~Clock() = default;
  virtual VirtualTime now() const = 0;
};

/// A clock that only moves when told to. Used by storage tests and by tools that
/// drive the services without a scheduler.
class ManualClock final : public Clock {
 public:
  VirtualTime now() const override { return now_; }
  void advance_ms(double ms) { now_ += ms_to_virtual(ms); }
  void set(VirtualTime t) { now_ = t; }

 private:
  VirtualTime now_ = 0;
};

}  // namespace microreduce::core
