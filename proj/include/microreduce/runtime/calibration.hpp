#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "microreduce/storage/io.hpp"

namespace microreduce::runtime {

struct LatencyCost {
  double base_ms = 0.0;
  double per_kb_ms = 0.0;
};

/// Virtual-time cost of each backend operation: base + per-KiB.
class LatencyTable {
 public:
  LatencyTable();

  double cost_ms(storage::IoKind kind, std::size_t bytes = 0) const;
  LatencyCost& at(storage::IoKind kind) { return costs_[static_cast<std::size_t>(kind)]; }
  const LatencyCost& at(storage::IoKind kind) const { return costs_[static_cast<std::size_t>(kind)]; }

 private:
  std::array<LatencyCost, storage::kIoKindCount> costs_{};
};

/// Every constant behind the virtual-time model. Loaded from and saved to a
/// key=value text file; defaults are the fitted values.
struct Calibration {
  // Compute throughput at one lane; see simulate_work(). The first two come
  // from fit_ingest_model(kIngestAnchors, kAnchorRows, fixed) with
  // fixed = object_get(kAnchorFileBytes) + counter_update.
  double parallel_fraction = 0.65367604473973795;
  double ingest_rows_per_ms = 4.9667050839183684;
  double map_rows_per_ms = 4.0;
  double reduce_entries_per_ms = 5.0;
  double rank_aggregates_per_ms = 1.0;

  // Cold starts.
  double init_ms_mean = 850.0;
  double init_ms_jitter = 20.0;
  double warm_pool_idle_ms = 600000.0;

  // Memory watermark model.
  double runtime_base_mb = 60.0;
  double ingest_input_factor = 2.6;

  LatencyTable latency;
  /// Each charged latency is scaled by a uniform factor in [1 - j, 1 + j].
  double io_jitter_fraction = 0.0;

  double queue_idle_poll_ms = 1000.0;
  double workflow_transition_ms = 80.0;

  static Calibration defaults();

  /// Applies "key = value" lines ('#' starts a comment) on top of `*this`.
  /// Unknown keys and malformed values throw InvalidArgument.
  void apply_text(std::string_view text);
  std::string to_text() const;

  static Calibration load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// One measured ingest configuration.
struct IngestAnchor {
  int memory_mb;
  int workers;
  double duration_ms;
};

struct IngestFit {
  double rows_per_ms;
  double parallel_fraction;
  double residual_ms;  ///< root-mean-square error over the anchors
};

/// Least-squares fit of  duration = fixed_ms + (rows / rate) * ((1 - p) + p / m)
/// with m = min(workers, vcpus(memory)) over the anchors.
IngestFit fit_ingest_model(std::span<const IngestAnchor> anchors, double rows, double fixed_ms);

/// Single-file ingest timings used to fit the defaults: 436,950 rows
/// (135 MiB) at (1024 MB, 1), (2048 MB, 2), (3072 MB, 3).
inline constexpr std::array<IngestAnchor, 3> kIngestAnchors{{
    {1024, 1, 92200.0},
    {2048, 2, 63100.0},
    {3072, 3, 54000.0},
}};
inline constexpr double kAnchorRows = 436950.0;
inline constexpr double kAnchorFileBytes = 135.0045462 * 1024.0 * 1024.0;

}  // namespace microreduce::runtime
