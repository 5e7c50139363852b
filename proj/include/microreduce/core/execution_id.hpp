#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace microreduce::core {

/// True for a 36-character lowercase 8-4-4-4-12 hexadecimal UUID.
bool is_uuid(std::string_view text);

/// Identity of one job run, threaded through every phase.
class ExecutionId {
 public:
  /// Throws InvalidArgument when `text` is not a lowercase UUID.
  static ExecutionId parse(std::string_view text);

  const std::string& str() const { return value_; }

  friend auto operator<=>(const ExecutionId&, const ExecutionId&) = default;

 private:
  explicit ExecutionId(std::string value) : value_(std::move(value)) {}
  std::string value_;
};

/// Source of version-4 UUIDs. Seeded generators yield a reproducible sequence;
/// the default constructor draws its seed from std::random_device.
class IdGenerator {
 public:
  IdGenerator();
  explicit IdGenerator(std::uint64_t seed);

  std::string next_uuid();
  ExecutionId new_execution_id() { return ExecutionId::parse(next_uuid()); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace microreduce::core

template <>
struct std::hash<microreduce::core::ExecutionId> {
  std::size_t operator()(const microreduce::core::ExecutionId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
