#include "microreduce/runtime/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "microreduce/core/errors.hpp"
#include "microreduce/runtime/function.hpp"

namespace microreduce::runtime {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct Field {
  std::string key;
  double* value;
};

std::vector<Field> fields(Calibration& c) {
  std::vector<Field> out{
      {"work.parallel_fraction", &c.parallel_fraction},
      {"work.ingest_rows_per_ms", &c.ingest_rows_per_ms},
      {"work.map_rows_per_ms", &c.map_rows_per_ms},
      {"work.reduce_entries_per_ms", &c.reduce_entries_per_ms},
      {"work.rank_aggregates_per_ms", &c.rank_aggregates_per_ms},
      {"cold_start.init_ms_mean", &c.init_ms_mean},
      {"cold_start.init_ms_jitter", &c.init_ms_jitter},
      {"cold_start.warm_pool_idle_ms", &c.warm_pool_idle_ms},
      {"memory.runtime_base_mb", &c.runtime_base_mb},
      {"memory.ingest_input_factor", &c.ingest_input_factor},
      {"io.jitter_fraction", &c.io_jitter_fraction},
      {"queue.idle_poll_ms", &c.queue_idle_poll_ms},
      {"workflow.transition_ms", &c.workflow_transition_ms},
  };
  for (std::size_t i = 0; i < storage::kIoKindCount; ++i) {
    const auto kind = static_cast<storage::IoKind>(i);
    const std::string name(storage::to_string(kind));
    out.push_back({"latency." + name + ".base_ms", &c.latency.at(kind).base_ms});
    out.push_back({"latency." + name + ".per_kb_ms", &c.latency.at(kind).per_kb_ms});
  }
  return out;
}

}  // namespace

LatencyTable::LatencyTable() {
  using storage::IoKind;
  at(IoKind::object_get) = {2.6, 0.03};
  at(IoKind::object_put) = {5.0, 0.03};
  at(IoKind::object_list) = {20.0, 0.0};
  at(IoKind::object_delete) = {4.0, 0.0};
  at(IoKind::kv_put) = {4.0, 0.01};
  at(IoKind::kv_query) = {10.0, 0.01};
  at(IoKind::kv_delete) = {4.0, 0.0};
  at(IoKind::counter_update) = {5.0, 0.0};
  at(IoKind::counter_read) = {3.0, 0.0};
  at(IoKind::queue_send) = {0.0, 0.0};
  at(IoKind::queue_receive) = {0.0, 0.0};
  at(IoKind::queue_delete) = {0.0, 0.0};
  at(IoKind::results_write) = {5.0, 0.0};
  at(IoKind::results_read) = {5.0, 0.0};
}

double LatencyTable::cost_ms(storage::IoKind kind, std::size_t bytes) const {
  const LatencyCost& c = at(kind);
  return c.base_ms + c.per_kb_ms * static_cast<double>(bytes) / 1024.0;
}

Calibration Calibration::defaults() { return Calibration{}; }

void Calibration::apply_text(std::string_view text) {
  auto table = fields(*this);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("calibration line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto raw = trim(line.substr(eq + 1));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc{} || ptr != raw.data() + raw.size() || !std::isfinite(value)) {
      throw InvalidArgument("calibration line " + std::to_string(line_no) + ": bad number '" + std::string(raw) + "'");
    }
    bool found = false;
    for (auto& f : table) {
      if (f.key == key) {
        *f.value = value;
        found = true;
        break;
      }
    }
    if (!found) throw InvalidArgument("calibration line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
  }
}

std::string Calibration::to_text() const {
  Calibration copy = *this;
  std::ostringstream out;
  for (const auto& f : fields(copy)) out << f.key << " = " << format_double(*f.value) << '\n';
  return out.str();
}

Calibration Calibration::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read calibration file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Calibration c = defaults();
  c.apply_text(buf.str());
  return c;
}

void Calibration::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write calibration file " + path.string());
  out << to_text();
}

IngestFit fit_ingest_model(std::span<const IngestAnchor> anchors, double rows, double fixed_ms) {
  if (anchors.size() < 2) throw InvalidArgument("need at least two anchors");
  if (rows <= 0.0) throw InvalidArgument("rows must be positive");
  // T - F = a + b * x with x = 1/m; serial time S = a + b, p = b / S.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(anchors.size());
  std::vector<double> xs;
  for (const auto& a : anchors) {
    const double m = std::min(a.workers, vcpus(a.memory_mb));
    const double x = 1.0 / m;
    const double y = a.duration_ms - fixed_ms;
    xs.push_back(x);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InvalidArgument("anchors do not vary in effective lanes");
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  const double serial = a + b;
  if (serial <= 0.0) throw InvalidArgument("fit produced non-positive serial time");
  IngestFit fit{rows / serial, std::clamp(b / serial, 0.0, 1.0), 0.0};
  double sq = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double predicted = fixed_ms + serial * ((1.0 - fit.parallel_fraction) + fit.parallel_fraction * xs[i]);
    sq += (predicted - anchors[i].duration_ms) * (predicted - anchors[i].duration_ms);
  }
  fit.residual_ms = std::sqrt(sq / n);
  return fit;
}

}  // namespace microreduce::runtime
