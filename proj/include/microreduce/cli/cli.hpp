#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "microreduce/data/generator.hpp"
#include "microreduce/report/report.hpp"
#include "microreduce/runtime/calibration.hpp"
#include "microreduce/workflow/definition.hpp"
#include "microreduce/workflow/orchestrator.hpp"
#include "microreduce/workflow/scenario.hpp"

namespace microreduce::cli {

enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitStalled = 2, kExitError = 3 };

int exit_code(workflow::JobStatus status);

/// Generates the dataset into `out` and returns the ledger path.
std::filesystem::path gen_data(const data::GenSpec& spec, const std::filesystem::path& out);

/// Keys of the first `count` CSV files under `dir`, loaded into `raw`.
std::vector<std::string> load_input(storage::ObjectStore& raw, const std::filesystem::path& dir, std::size_t count);

struct RunRequest {
  workflow::ScenarioConfig scenario;
  runtime::Calibration calibration = runtime::Calibration::defaults();
  workflow::WorkflowDefinition definition = workflow::default_definition();
  report::Rates rates;
  std::filesystem::path data;
  std::filesystem::path out;
};

struct RunOutput {
  workflow::JobResult result;
  std::filesystem::path dir;
};

/// Runs one job over the data directory and writes <out>/<execution id>/.
RunOutput run(const RunRequest& request);

/// Files written for every run:
///   config.json ranking.json results.csv trace.csv ledger.csv concurrency.csv
///   summary.json kpi.txt phases.txt cost.txt
void write_run_outputs(const std::filesystem::path& dir, const RunRequest& request,
                       const workflow::JobResult& result);

enum class ReportFormat { text, csv };

/// Reads trace.csv and ledger.csv from `exec_dir` and writes kpi, phases and
/// cost reports into `out`. Returns the paths written. Throws NotFoundError
/// when the execution directory or its trace is missing.
std::vector<std::filesystem::path> write_reports(const std::filesystem::path& exec_dir,
                                                 const std::filesystem::path& out, ReportFormat format,
                                                 const report::Rates& rates = {});

struct SweepPoint {
  storage::ThrottlePolicy throttle;
  workflow::JobStatus status = workflow::JobStatus::failed;
  std::int64_t ingested = 0;
  std::int64_t dlq_rows = 0;
  double loss_pct = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  /// Stalled point with loss inside [low, high] closest to the target.
  std::optional<SweepPoint> chosen;
};

/// Runs `base` on the dataset `spec` once per throttle setting.
SweepResult sweep_throttle(const data::GenSpec& spec, const workflow::ScenarioConfig& base,
                           const std::vector<storage::ThrottlePolicy>& grid, double target_pct = 6.0,
                           double low_pct = 5.0, double high_pct = 7.0,
                           const runtime::Calibration& calibration = runtime::Calibration::defaults());

/// Entry point of the `microreduce` tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace microreduce::cli
