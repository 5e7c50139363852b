#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "microreduce/core/records.hpp"
#include "microreduce/storage/object_store.hpp"

namespace microreduce::data {

struct CarrierSpec {
  std::string code;
  double weight = 0.0;
  std::int64_t delay_mean = 0;
  std::int64_t delay_sigma = 0;
};

/// Fourteen carriers with distinct mean delays.
std::vector<CarrierSpec> default_carriers();

struct GenSpec {
  std::size_t files = 1;
  std::size_t rows_per_file = 1000;
  std::vector<CarrierSpec> carriers = default_carriers();
  double invalid_fraction = 0.02;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument on zero files/rows, empty or duplicate carriers,
  /// bad codes, negative sigma, weights not summing to 1, or a fraction outside [0, 1).
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static GenSpec from_json(const nlohmann::json& j);
};

/// Exact composition of generated data: per-carrier valid sums, plus row totals.
struct Ledger {
  std::map<std::string, core::CarrierAggregate> carriers;
  std::int64_t invalid = 0;
  std::int64_t total = 0;

  std::int64_t valid() const { return total - invalid; }
  void merge(const Ledger& other);
  core::RankingResult ranking(std::size_t limit = core::kDefaultRankingLimit) const;

  /// {"<carrier>": {"delay_sum", "count"}, ..., "invalid": n, "total": n}
  nlohmann::json to_json() const;
  static Ledger from_json(const nlohmann::json& j);

  friend bool operator==(const Ledger&, const Ledger&) = default;
};

struct GeneratedFile {
  std::string name;
  std::string body;
  Ledger ledger;
};

std::string file_name(std::size_t index);

/// Builds file `index` of the dataset. Exactly round(invalid_fraction * rows)
/// rows are invalid; the rest carry an integral ArrDelay drawn from the
/// carrier's normal distribution.
GeneratedFile generate_file(const GenSpec& spec, std::size_t index);

struct Dataset {
  std::vector<std::string> files;
  Ledger ledger;
  std::vector<Ledger> per_file;
};

/// Writes every file into `sink` under its file_name().
Dataset generate_dataset(const GenSpec& spec, storage::ObjectStore& sink);
/// Writes every file plus ledger.json and spec.json into `dir`.
Dataset generate_dataset(const GenSpec& spec, const std::filesystem::path& dir);

}  // namespace microreduce::data
