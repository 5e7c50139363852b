#include "microreduce/cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "microreduce/core/errors.hpp"
#include "microreduce/core/serialize.hpp"
#include "microreduce/runtime/ledger.hpp"
#include "microreduce/storage/errors.hpp"

namespace microreduce::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw storage::NotFoundError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

json breakdown_json(const workflow::PhaseBreakdown& b) {
  json seconds = json::object();
  json percent = json::object();
  for (std::size_t i = 0; i < workflow::kPhaseCount; ++i) {
    seconds[std::string(workflow::kPhaseNames[i])] = b.seconds[i];
    if (i < workflow::kTotal) percent[std::string(workflow::kPhaseNames[i])] = b.percent[i];
  }
  return {{"seconds", seconds}, {"percent", percent}};
}

std::vector<report::PhaseRow> phase_rows(const std::string& name, const workflow::ExecutionTrace& trace) {
  try {
    return {{name, workflow::phase_breakdown(trace)}};
  } catch (const InvalidArgument&) {
    return {};
  }
}

json summary_json(const workflow::JobResult& r) {
  json pool = json::array();
  for (const auto& [at, size] : r.map_pool_history) pool.push_back({{"t_ms", core::virtual_to_ms(at)}, {"pollers", size}});
  json j{{"execution_id", r.execution_id.str()},
         {"status", std::string(workflow::to_string(r.status))},
         {"message", r.message},
         {"warnings", r.warnings},
         {"records_ingested", r.records_ingested},
         {"invalid_rows", r.invalid_rows},
         {"batches", r.batches},
         {"dlq_messages", r.dlq_messages},
         {"dlq_rows", r.dlq_rows},
         {"gate",
          {{"ingested", r.gate.ingested},
           {"mapped", r.gate.mapped},
           {"attempts", r.gate.attempts},
           {"overridden", r.gate.overridden},
           {"passed", r.gate.passed}}},
         {"partitions", r.partitions.size()},
         {"degenerate_partitions", r.degenerate_partitions},
         {"invocations", r.invocations.size()},
         {"map_pool", pool}};
  try {
    j["phases"] = breakdown_json(workflow::phase_breakdown(r.trace));
  } catch (const InvalidArgument&) {
    j["phases"] = nullptr;
  }
  return j;
}

std::string results_csv(const core::RankingResult& ranking) {
  std::ostringstream ss;
  ss << "rank,carrier,on_time_performance\n";
  char buf[64];
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", ranking.entries[i].on_time_performance);
    ss << i + 1 << ',' << ranking.entries[i].carrier << ',' << buf << '\n';
  }
  return ss.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

int exit_code(workflow::JobStatus status) {
  switch (status) {
    case workflow::JobStatus::succeeded: return kExitOk;
    case workflow::JobStatus::stalled: return kExitStalled;
    case workflow::JobStatus::failed: return kExitFailed;
  }
  return kExitFailed;
}

fs::path gen_data(const data::GenSpec& spec, const fs::path& out) {
  data::generate_dataset(spec, out);
  return out / "ledger.json";
}

std::vector<std::string> load_input(storage::ObjectStore& raw, const fs::path& dir, std::size_t count) {
  if (!fs::is_directory(dir)) throw storage::NotFoundError("no data directory " + dir.string());
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
  }
  std::sort(csvs.begin(), csvs.end());
  if (csvs.size() < count) {
    throw InvalidArgument("scenario needs " + std::to_string(count) + " files, " + dir.string() + " has " +
                          std::to_string(csvs.size()));
  }
  csvs.resize(count);
  std::vector<std::string> keys;
  for (const auto& path : csvs) {
    keys.push_back(path.filename().string());
    raw.put(keys.back(), read_file(path));
  }
  return keys;
}

RunOutput run(const RunRequest& request) {
  request.scenario.validate();
  request.definition.validate();
  workflow::Environment env(request.scenario, request.calibration);
  const auto files = load_input(env.services().raw, request.data, request.scenario.files);
  workflow::JobResult result = env.run_job(files, request.definition);
  const fs::path dir = request.out / result.execution_id.str();
  write_run_outputs(dir, request, result);
  return {std::move(result), dir};
}

void write_run_outputs(const fs::path& dir, const RunRequest& request, const workflow::JobResult& result) {
  fs::create_directories(dir);
  const json config{{"scenario", request.scenario.to_json()},
                    {"calibration", request.calibration.to_text()},
                    {"workflow", request.definition.to_text()},
                    {"rates",
                     {{"price_per_gb_s", request.rates.price_per_gb_s},
                      {"request_price", request.rates.request_price},
                      {"currency", request.rates.currency}}},
                    {"data", request.data.string()}};
  write_file(dir / "config.json", config.dump(2) + "\n");
  write_file(dir / "ranking.json", core::to_json(result.ranking).dump(2) + "\n");
  write_file(dir / "results.csv", results_csv(result.ranking));
  write_file(dir / "trace.csv", render([&](std::ostream& o) { result.trace.write_csv(o); }));
  write_file(dir / "ledger.csv", render([&](std::ostream& o) { runtime::write_ledger_csv(o, result.invocations); }));
  write_file(dir / "concurrency.csv", render([&](std::ostream& o) {
               report::write_concurrency_csv(o, report::concurrency_series(result.invocations));
             }));
  write_file(dir / "summary.json", summary_json(result).dump(2) + "\n");
  write_file(dir / "kpi.txt", render([&](std::ostream& o) { report::write_kpi_text(o, report::kpi_table(result.invocations)); }));
  write_file(dir / "phases.txt", render([&](std::ostream& o) {
               const auto rows = phase_rows(request.scenario.name, result.trace);
               report::write_phase_seconds_text(o, rows);
               o << '\n';
               report::write_phase_percent_text(o, rows);
             }));
  write_file(dir / "cost.txt", render([&](std::ostream& o) {
               report::write_cost_text(o, report::cost_report(result.invocations, request.rates));
             }));
}

std::vector<fs::path> write_reports(const fs::path& exec_dir, const fs::path& out, ReportFormat format,
                                    const report::Rates& rates) {
  const fs::path trace_path = exec_dir / "trace.csv";
  if (!fs::is_regular_file(trace_path)) throw storage::NotFoundError("no execution at " + exec_dir.string());
  std::istringstream trace_in(read_file(trace_path));
  const auto trace = workflow::ExecutionTrace::read_csv(trace_in, exec_dir.filename().string());
  std::vector<runtime::InvocationRecord> ledger;
  if (fs::is_regular_file(exec_dir / "ledger.csv")) {
    std::istringstream ledger_in(read_file(exec_dir / "ledger.csv"));
    ledger = runtime::read_ledger_csv(ledger_in);
  }
  const auto rows = std::vector<report::PhaseRow>{{exec_dir.filename().string(), workflow::phase_breakdown(trace)}};
  const auto kpis = report::kpi_table(ledger);
  const auto cost = report::cost_report(ledger, rates);

  fs::create_directories(out);
  const bool csv = format == ReportFormat::csv;
  const std::string ext = csv ? ".csv" : ".txt";
  std::vector<fs::path> written{out / ("kpi" + ext), out / ("phases" + ext), out / ("cost" + ext)};
  write_file(written[0], render([&](std::ostream& o) {
               csv ? report::write_kpi_csv(o, kpis) : report::write_kpi_text(o, kpis);
             }));
  write_file(written[1], render([&](std::ostream& o) {
               if (csv) {
                 report::write_phase_seconds_csv(o, rows);
                 o << '\n';
                 report::write_phase_percent_csv(o, rows);
               } else {
                 report::write_phase_seconds_text(o, rows);
                 o << '\n';
                 report::write_phase_percent_text(o, rows);
               }
             }));
  write_file(written[2], render([&](std::ostream& o) {
               csv ? report::write_cost_csv(o, cost) : report::write_cost_text(o, cost);
             }));
  return written;
}

SweepResult sweep_throttle(const data::GenSpec& spec, const workflow::ScenarioConfig& base,
                           const std::vector<storage::ThrottlePolicy>& grid, double target_pct, double low_pct,
                           double high_pct, const runtime::Calibration& calibration) {
  SweepResult sweep;
  for (const auto& throttle : grid) {
    workflow::ScenarioConfig sc = base;
    sc.files = spec.files;
    sc.throttle = throttle;
    sc.override_gate = false;
    workflow::Environment env(sc, calibration);
    const auto dataset = data::generate_dataset(spec, env.services().raw);
    const auto result = env.run_job(dataset.files);
    SweepPoint p;
    p.throttle = throttle;
    p.status = result.status;
    p.ingested = result.records_ingested;
    p.dlq_rows = result.dlq_rows;
    p.loss_pct = p.ingested > 0 ? 100.0 * static_cast<double>(p.dlq_rows) / static_cast<double>(p.ingested) : 0.0;
    sweep.points.push_back(p);
    const bool fits = p.status == workflow::JobStatus::stalled && p.loss_pct >= low_pct && p.loss_pct <= high_pct;
    if (fits && (!sweep.chosen || std::abs(p.loss_pct - target_pct) < std::abs(sweep.chosen->loss_pct - target_pct))) {
      sweep.chosen = p;
    }
  }
  return sweep;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Serverless MapReduce simulator"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic on-time dataset");
  std::string spec_path;
  std::string gen_out;
  gen->add_option("--spec", spec_path, "GenSpec JSON file")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  auto* runc = app.add_subcommand("run", "Run one job");
  std::string scenario_arg;
  std::string data_dir;
  std::string run_out = "runs";
  bool override_gate = false;
  std::string shuffle;
  std::optional<int> threads;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> files;
  std::optional<std::uint64_t> seed;
  std::optional<double> throttle_ops;
  std::optional<double> throttle_burst;
  std::optional<double> map_failure_rate;
  std::string calibration_path;
  std::string workflow_path;
  std::string rates_path;
  runc->add_option("--scenario", scenario_arg, "Scenario number 1-6 or a scenario JSON file")->required();
  runc->add_option("--data", data_dir, "Directory of input CSV files")->required();
  runc->add_option("--out", run_out, "Output root");
  runc->add_flag("--override-gate", override_gate, "Let a stalled gate pass");
  runc->add_option("--shuffle", shuffle, "object or kv");
  runc->add_option("--threads", threads, "Ingest worker threads");
  runc->add_option("--batch-size", batch_size, "Records per micro-batch");
  runc->add_option("--files", files, "Number of input files");
  runc->add_option("--seed", seed, "Seed");
  runc->add_option("--throttle-ops", throttle_ops, "Sustained kv writes per second (enables throttling)");
  runc->add_option("--throttle-burst", throttle_burst, "Token bucket capacity");
  runc->add_option("--map-failure-rate", map_failure_rate, "Injected map failure probability");
  runc->add_option("--calibration", calibration_path, "Calibration file");
  runc->add_option("--workflow", workflow_path, "Workflow definition file");
  runc->add_option("--rates", rates_path, "Cost rates JSON file");

  auto* rep = app.add_subcommand("report", "Write KPI, phase and cost reports for an execution");
  std::string exec_arg;
  std::string runs_dir = "runs";
  std::string rep_out;
  std::string format = "text";
  std::string rep_rates;
  rep->add_option("--exec", exec_arg, "Execution id or directory")->required();
  rep->add_option("--runs", runs_dir, "Directory holding executions");
  rep->add_option("--out", rep_out, "Output directory")->required();
  rep->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  rep->add_option("--rates", rep_rates, "Cost rates JSON file");

  auto* cal = app.add_subcommand("calibrate-throttle", "Sweep kv throttle settings on a multi-file workload");
  std::size_t cal_files = 12;
  std::size_t cal_rows = 25000;
  std::uint64_t cal_seed = 1;
  std::string ops_list = "1400,1450,1500,1550,1600,1650,1700";
  std::string burst_list = "400,600,800,1000";
  std::string cal_out;
  cal->add_option("--files", cal_files, "Input files");
  cal->add_option("--rows", cal_rows, "Rows per file");
  cal->add_option("--data-seed", cal_seed, "Dataset seed");
  cal->add_option("--ops", ops_list, "Comma-separated sustained ops/s values");
  cal->add_option("--bursts", burst_list, "Comma-separated burst capacities");
  cal->add_option("--out", cal_out, "Write the chosen scenario JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen) {
      const auto spec = data::GenSpec::from_json(json::parse(read_file(spec_path)));
      out << gen_data(spec, gen_out).string() << '\n';
      return kExitOk;
    }

    if (*runc) {
      RunRequest req;
      const bool numeric = !scenario_arg.empty() && std::all_of(scenario_arg.begin(), scenario_arg.end(), ::isdigit);
      req.scenario = numeric ? workflow::builtin_scenario(std::stoi(scenario_arg))
                             : workflow::ScenarioConfig::load(scenario_arg);
      if (const char* env_seed = std::getenv("MICROREDUCE_SEED")) req.scenario.seed = std::stoull(env_seed);
      if (!shuffle.empty()) req.scenario.shuffle = storage::parse_shuffle_backend(shuffle);
      if (threads) req.scenario.ingest_threads = *threads;
      if (batch_size) req.scenario.batch_size = *batch_size;
      if (files) req.scenario.files = *files;
      if (seed) req.scenario.seed = *seed;
      if (throttle_ops) {
        req.scenario.throttle.enabled = true;
        req.scenario.throttle.sustained_ops_per_sec = *throttle_ops;
        if (!throttle_burst) req.scenario.throttle.burst_capacity = *throttle_ops;
      }
      if (throttle_burst) req.scenario.throttle.burst_capacity = *throttle_burst;
      if (map_failure_rate) req.scenario.map_failure_rate = *map_failure_rate;
      if (override_gate) req.scenario.override_gate = true;
      if (!calibration_path.empty()) req.calibration = runtime::Calibration::load(calibration_path);
      if (!workflow_path.empty()) req.definition = workflow::WorkflowDefinition::load(workflow_path);
      if (!rates_path.empty()) req.rates = report::Rates::load(rates_path);
      req.data = data_dir;
      req.out = run_out;

      const RunOutput output = run(req);
      const auto& r = output.result;
      out << "execution " << r.execution_id.str() << ' ' << workflow::to_string(r.status) << '\n';
      if (!r.message.empty()) out << r.message << '\n';
      for (const auto& w : r.warnings) out << "warning: " << w << '\n';
      if (r.dlq_messages > 0) out << "dlq: " << r.dlq_messages << " batches, " << r.dlq_rows << " records\n";
      const auto rows = phase_rows(req.scenario.name, r.trace);
      if (!rows.empty()) report::write_phase_seconds_text(out, rows);
      out << "output " << output.dir.string() << '\n';
      return exit_code(r.status);
    }

    if (*rep) {
      fs::path exec_dir = exec_arg;
      if (!fs::is_directory(exec_dir)) exec_dir = fs::path(runs_dir) / exec_arg;
      if (!fs::is_directory(exec_dir)) {
        err << "unknown execution " << exec_arg << '\n';
        return kExitError;
      }
      const report::Rates rates = rep_rates.empty() ? report::Rates{} : report::Rates::load(rep_rates);
      for (const auto& path : write_reports(exec_dir, rep_out, format == "csv" ? ReportFormat::csv : ReportFormat::text,
                                            rates)) {
        out << path.string() << '\n';
      }
      return kExitOk;
    }

    if (*cal) {
      data::GenSpec spec;
      spec.files = cal_files;
      spec.rows_per_file = cal_rows;
      spec.seed = cal_seed;
      std::vector<storage::ThrottlePolicy> grid;
      for (double ops : parse_list(ops_list)) {
        for (double burst : parse_list(burst_list)) grid.push_back({ops, burst, true});
      }
      const workflow::ScenarioConfig base = workflow::builtin_scenario(6);
      const SweepResult sweep = sweep_throttle(spec, base, grid);
      char buf[160];
      out << "ops,burst,status,ingested,dlq_rows,loss_pct\n";
      for (const auto& p : sweep.points) {
        std::snprintf(buf, sizeof buf, "%g,%g,%s,%lld,%lld,%.2f\n", p.throttle.sustained_ops_per_sec,
                      p.throttle.burst_capacity, std::string(workflow::to_string(p.status)).c_str(),
                      static_cast<long long>(p.ingested), static_cast<long long>(p.dlq_rows), p.loss_pct);
        out << buf;
      }
      if (!sweep.chosen) {
        err << "no setting stalled the gate with 5-7% loss\n";
        return kExitFailed;
      }
      std::snprintf(buf, sizeof buf, "chosen ops=%g burst=%g loss=%.2f%%\n", sweep.chosen->throttle.sustained_ops_per_sec,
                    sweep.chosen->throttle.burst_capacity, sweep.chosen->loss_pct);
      out << buf;
      if (!cal_out.empty()) {
        json j = base.to_json();
        j["scenario"] = 6;
        j["files"] = cal_files;
        j["throttle"] = {{"enabled", true},
                         {"sustained_ops_per_sec", sweep.chosen->throttle.sustained_ops_per_sec},
                         {"burst_capacity", sweep.chosen->throttle.burst_capacity}};
        j["calibrated_on"] = spec.to_json();
        j["calibrated_loss_pct"] = sweep.chosen->loss_pct;
        write_file(cal_out, j.dump(2) + "\n");
      }
      return kExitOk;
    }
  } catch (const storage::NotFoundError& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace microreduce::cli
