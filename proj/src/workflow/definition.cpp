#include "microreduce/workflow/definition.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "microreduce/core/errors.hpp"

namespace microreduce::workflow {

namespace {

struct TargetRule {
  StateKind kind;
  std::string_view fanout;
};

const std::map<std::string_view, TargetRule>& target_rules() {
  static const std::map<std::string_view, TargetRule> rules{
      {"ingest", {StateKind::parallel_map, "files"}},
      {"reduce_prep", {StateKind::task, ""}},
      {"gate", {StateKind::wait_loop, ""}},
      {"reduce1", {StateKind::parallel_map, "partitions"}},
      {"reduce2", {StateKind::task, ""}},
  };
  return rules;
}

StateKind parse_kind(std::string_view s) {
  if (s == "task") return StateKind::task;
  if (s == "parallel-map") return StateKind::parallel_map;
  if (s == "wait-loop") return StateKind::wait_loop;
  throw InvalidArgument("workflow: unknown state kind '" + std::string(s) + "'");
}

template <typename T>
T number(const std::string& s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InvalidArgument(std::string("workflow: bad ") + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(StateKind kind) {
  switch (kind) {
    case StateKind::task: return "task";
    case StateKind::parallel_map: return "parallel-map";
    case StateKind::wait_loop: return "wait-loop";
  }
  return "task";
}

void WorkflowDefinition::validate() const {
  if (states.empty()) throw InvalidArgument("workflow: no states");
  if (payload_limit_bytes == 0) throw InvalidArgument("workflow: payload limit must be positive");
  if (retries < 0) throw InvalidArgument("workflow: retries must be non-negative");
  if (retry_backoff_ms < 0) throw InvalidArgument("workflow: retry backoff must be non-negative");
  std::size_t terminals = 0;
  std::set<std::string> names;
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    if (!names.insert(s.name).second) throw InvalidArgument("workflow: duplicate state " + s.name);
    if (s.terminal) ++terminals;
    const auto rule = target_rules().find(s.target);
    if (rule == target_rules().end()) throw InvalidArgument("workflow: unknown target '" + s.target + "'");
    if (rule->second.kind != s.kind) {
      throw InvalidArgument("workflow: state " + s.name + " must be " + std::string(to_string(rule->second.kind)));
    }
    if (rule->second.fanout != s.fanout) {
      throw InvalidArgument("workflow: state " + s.name + " has the wrong fan-out source");
    }
    if (!position.emplace(s.target, i).second) throw InvalidArgument("workflow: target " + s.target + " used twice");
  }
  if (terminals != 1) throw InvalidArgument("workflow: expected exactly one terminal state");
  if (!states.back().terminal) throw InvalidArgument("workflow: the terminal state must be last");
  std::size_t prev = 0;
  bool first = true;
  for (const char* t : {"ingest", "gate", "reduce1", "reduce2"}) {
    const auto it = position.find(t);
    if (it == position.end()) throw InvalidArgument(std::string("workflow: missing ") + t + " state");
    if (!first && it->second < prev) throw InvalidArgument(std::string("workflow: ") + t + " state is out of order");
    prev = it->second;
    first = false;
  }
  if (const auto prep = position.find("reduce_prep"); prep != position.end()) {
    if (prep->second < position["ingest"] || prep->second > position["reduce1"]) {
      throw InvalidArgument("workflow: reduce_prep must sit between ingest and reduce1");
    }
  }
}

std::string WorkflowDefinition::to_text() const {
  std::ostringstream out;
  out << "payload_limit_bytes " << payload_limit_bytes << '\n';
  out << "retry " << retries << ' ' << retry_backoff_ms << '\n';
  for (const auto& s : states) {
    out << "state " << s.name << ' ' << to_string(s.kind) << ' ' << s.target << ' '
        << (s.fanout.empty() ? "-" : s.fanout) << (s.terminal ? " end" : "") << '\n';
  }
  return out.str();
}

WorkflowDefinition WorkflowDefinition::parse(std::string_view text) {
  WorkflowDefinition def;
  def.states.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    const std::string where = "workflow line " + std::to_string(line_no) + ": ";
    if (w[0] == "payload_limit_bytes" && w.size() == 2) {
      def.payload_limit_bytes = number<std::size_t>(w[1], "payload limit");
    } else if (w[0] == "retry" && w.size() == 3) {
      def.retries = number<int>(w[1], "retry count");
      def.retry_backoff_ms = number<double>(w[2], "retry backoff");
    } else if (w[0] == "state" && (w.size() == 5 || (w.size() == 6 && w[5] == "end"))) {
      def.states.push_back({w[1], parse_kind(w[2]), w[3], w[4] == "-" ? "" : w[4], w.size() == 6});
    } else {
      throw InvalidArgument(where + "cannot parse '" + line + "'");
    }
  }
  def.validate();
  return def;
}

WorkflowDefinition WorkflowDefinition::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read workflow definition " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

WorkflowDefinition default_definition() {
  WorkflowDefinition def;
  def.states = {
      {"ParallelIngest", StateKind::parallel_map, "ingest", "files", false},
      {"ReducePrep", StateKind::task, "reduce_prep", "", false},
      {"ReduceGate", StateKind::wait_loop, "gate", "", false},
      {"ParallelReduceAggregate", StateKind::parallel_map, "reduce1", "partitions", false},
      {"ReduceRank", StateKind::task, "reduce2", "", true},
  };
  return def;
}

}  // namespace microreduce::workflow
