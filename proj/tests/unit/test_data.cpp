#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "microreduce/core/errors.hpp"
#include "microreduce/data/csv.hpp"
#include "microreduce/data/generator.hpp"
#include "support.hpp"

using namespace microreduce;
using namespace microreduce::data;

namespace {

// Independent recount: a plain quote-aware splitter and the query rules.
std::vector<std::string> naive_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

Ledger recount(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  std::getline(in, line);
  const auto header = naive_split(line);
  auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  const auto carrier = col("UniqueCarrier"), delay = col("ArrDelay"), cancelled = col("Cancelled");
  Ledger l;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++l.total;
    const auto f = naive_split(line);
    if (f[delay].empty() || std::stod(f[cancelled]) != 0.0) {
      ++l.invalid;
      continue;
    }
    auto& agg = l.carriers[f[carrier]];
    agg.carrier = f[carrier];
    agg.delay_sum += std::llround(std::stod(f[delay]));
    agg.count += 1;
  }
  return l;
}

Ledger ledger_of(const ParseResult& parsed) {
  Ledger l;
  l.total = static_cast<std::int64_t>(parsed.stats.total_rows);
  l.invalid = static_cast<std::int64_t>(parsed.stats.invalid_rows);
  for (const auto& r : parsed.records) {
    if (!r.valid) continue;
    auto& agg = l.carriers[r.carrier];
    agg.carrier = r.carrier;
    agg.delay_sum += r.arr_delay_min;
    agg.count += 1;
  }
  return l;
}

}  // namespace

TEST_CASE("split_csv_line handles quoting") {
  std::vector<std::string> f;
  CHECK(split_csv_line(R"(a,"b,c","d""e",,)", f));
  CHECK(f == std::vector<std::string>{"a", "b,c", "d\"e", "", ""});
  CHECK(split_csv_line("", f));
  CHECK(f == std::vector<std::string>{""});
  CHECK_FALSE(split_csv_line(R"(a,"unterminated)", f));
  CHECK_FALSE(split_csv_line(R"("x"y,z)", f));
}

TEST_CASE("parse_minutes accepts numbers only") {
  std::int64_t v = 0;
  CHECK(parse_minutes("15", v));
  CHECK(v == 15);
  CHECK(parse_minutes("-3.00", v));
  CHECK(v == -3);
  CHECK(parse_minutes("2.5e1", v));
  CHECK(v == 25);
  CHECK(parse_minutes("7.5", v));
  CHECK(v == 8);
  CHECK_FALSE(parse_minutes("", v));
  CHECK_FALSE(parse_minutes("NA", v));
  CHECK_FALSE(parse_minutes("12abc", v));
  CHECK_FALSE(parse_minutes(" ", v));
}

TEST_CASE("carrier codes") {
  CHECK(is_carrier_code("AA"));
  CHECK(is_carrier_code("9E"));
  CHECK(is_carrier_code("XYZ"));
  CHECK_FALSE(is_carrier_code("A"));
  CHECK_FALSE(is_carrier_code("aa"));
  CHECK_FALSE(is_carrier_code("ABCD"));
}

TEST_CASE("parse_csv basic rows") {
  const std::string csv =
      "Year,UniqueCarrier,ArrDelay,Cancelled,Origin\n"
      "2008,AA,15,0,IAD\n"
      "2008,UA,,1,ORD\n"
      "2008,WN,NA,0,LAX\n"
      "2008,DL,-4.00,0.00,ATL\r\n"
      "2008,\"US\",\"7\",0,\"PHL\"\n"
      "2008,broken\n";
  const auto r = parse_csv(csv);
  CHECK(r.stats.total_rows == 6);
  CHECK(r.stats.valid_rows == 3);
  CHECK(r.stats.invalid_rows == 3);
  REQUIRE(r.records.size() == 6);
  CHECK(r.records[0].carrier == "AA");
  CHECK(r.records[0].arr_delay_min == 15);
  CHECK(r.records[0].valid);
  CHECK(r.records[0].extra.size() == CsvSchema::passthrough.size());
  CHECK(r.records[3].arr_delay_min == -4);
  CHECK(r.records[4].carrier == "US");
  CHECK_FALSE(r.records[5].valid);

  ParseOptions lean;
  lean.keep_invalid = false;
  lean.keep_passthrough = false;
  const auto l = parse_csv(csv, lean);
  CHECK(l.records.size() == 3);
  CHECK(l.records[0].extra.empty());
  CHECK(l.stats.invalid_rows == 3);
}

TEST_CASE("header problems") {
  CHECK(parse_csv("UniqueCarrier,ArrDelay,Cancelled\n").records.empty());
  CHECK(parse_csv("\xEF\xBB\xBFUniqueCarrier,ArrDelay,Cancelled\nAA,1,0\n").stats.valid_rows == 1);
  CHECK_THROWS_AS(parse_csv(""), InvalidArgument);
  CHECK_THROWS_AS(parse_csv("UniqueCarrier,Cancelled\nAA,0\n"), InvalidArgument);
}

TEST_CASE("the parser is total over arbitrary bytes") {
  std::mt19937_64 rng(99);
  const std::string alphabet = "AU9,\"\n\r 0123456789.-eNx\x01\xff";
  for (int round = 0; round < 3000; ++round) {
    std::string body = "UniqueCarrier,ArrDelay,Cancelled\n";
    const auto n = testing::uniform(rng, 0, 400);
    for (int i = 0; i < n; ++i) body += alphabet[static_cast<std::size_t>(testing::uniform(rng, 0, static_cast<std::int64_t>(alphabet.size()) - 1))];
    ParseResult r;
    CHECK_NOTHROW(r = parse_csv(body));
    CHECK(r.stats.total_rows == r.stats.valid_rows + r.stats.invalid_rows);
    for (const auto& rec : r.records) {
      if (rec.valid) CHECK(is_carrier_code(rec.carrier));
    }
  }
}

TEST_CASE("generated files parse back to the generator ledger") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    GenSpec spec;
    spec.files = 2;
    spec.rows_per_file = 3000 + 500 * seed;
    spec.invalid_fraction = 0.05 * static_cast<double>(seed % 3);
    spec.seed = seed;
    Ledger merged;
    for (std::size_t i = 0; i < spec.files; ++i) {
      const auto file = generate_file(spec, i);
      CHECK(file.name == file_name(i));
      const auto parsed = parse_csv(file.body);
      CHECK(ledger_of(parsed) == file.ledger);
      CHECK(recount(file.body) == file.ledger);
      CHECK(file.ledger.total == static_cast<std::int64_t>(spec.rows_per_file));
      CHECK(file.ledger.invalid ==
            std::llround(spec.invalid_fraction * static_cast<double>(spec.rows_per_file)));
      merged.merge(file.ledger);
    }
    storage::ObjectStore sink;
    const auto ds = generate_dataset(spec, sink);
    CHECK(ds.ledger == merged);
    CHECK(ds.files == std::vector<std::string>{"flights_01.csv", "flights_02.csv"});
  }
}

TEST_CASE("generated rows have the wide layout") {
  GenSpec spec;
  spec.rows_per_file = 500;
  spec.invalid_fraction = 0.2;
  const auto file = generate_file(spec, 0);
  std::istringstream in(file.body);
  std::string line;
  while (std::getline(in, line)) CHECK(naive_split(line).size() == 93);
}

TEST_CASE("generation is deterministic under a seed") {
  GenSpec spec;
  spec.rows_per_file = 2000;
  spec.seed = 12;
  CHECK(generate_file(spec, 0).body == generate_file(spec, 0).body);
  CHECK(generate_file(spec, 0).body != generate_file(spec, 1).body);
  GenSpec other = spec;
  other.seed = 13;
  CHECK(generate_file(spec, 0).body != generate_file(other, 0).body);
}

TEST_CASE("a full-size file lands near 135 MB") {
  GenSpec spec;
  spec.rows_per_file = 436950;
  const auto file = generate_file(spec, 0);
  const double mb = static_cast<double>(file.body.size()) / (1024.0 * 1024.0);
  CHECK(mb > 135.0045462 * 0.85);
  CHECK(mb < 135.0045462 * 1.15);
}

TEST_CASE("spec validation and json") {
  GenSpec spec;
  CHECK_NOTHROW(spec.validate());
  GenSpec bad = spec;
  bad.files = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = spec;
  bad.invalid_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = spec;
  bad.carriers[0].weight += 0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = spec;
  bad.carriers[1].code = bad.carriers[0].code;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  const auto j = spec.to_json();
  CHECK(GenSpec::from_json(j).to_json() == j);
  CHECK(GenSpec::from_json(nlohmann::json{{"files", 3}}).files == 3);
}

TEST_CASE("ledger json shape and ranking") {
  GenSpec spec;
  spec.rows_per_file = 5000;
  const auto file = generate_file(spec, 0);
  const auto j = file.ledger.to_json();
  CHECK(j.contains("invalid"));
  CHECK(j.contains("total"));
  CHECK(j["WN"].contains("delay_sum"));
  CHECK(Ledger::from_json(j) == file.ledger);
  const auto ranking = file.ledger.ranking(3);
  CHECK(ranking.entries.size() == 3);
}

TEST_CASE("dataset directory holds files, ledger and spec") {
  const auto dir = std::filesystem::temp_directory_path() / "microreduce_data_test";
  std::filesystem::remove_all(dir);
  GenSpec spec;
  spec.files = 3;
  spec.rows_per_file = 100;
  const auto ds = generate_dataset(spec, dir);
  CHECK(std::filesystem::exists(dir / "flights_03.csv"));
  std::ifstream in(dir / "ledger.json");
  CHECK(Ledger::from_json(nlohmann::json::parse(in)) == ds.ledger);
  CHECK(std::filesystem::exists(dir / "spec.json"));
  std::filesystem::remove_all(dir);
}
