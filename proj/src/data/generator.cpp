#include "microreduce/data/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "microreduce/core/errors.hpp"
#include "microreduce/core/query.hpp"
#include "microreduce/data/csv.hpp"

namespace microreduce::data {

namespace {

struct Airport {
  const char* code;
  const char* city;
  const char* state;
  const char* state_name;
};

constexpr std::array<Airport, 20> kAirports{{
    {"ATL", "Atlanta, GA", "GA", "Georgia"},
    {"ORD", "Chicago, IL", "IL", "Illinois"},
    {"DFW", "Dallas/Fort Worth, TX", "TX", "Texas"},
    {"DEN", "Denver, CO", "CO", "Colorado"},
    {"LAX", "Los Angeles, CA", "CA", "California"},
    {"PHX", "Phoenix, AZ", "AZ", "Arizona"},
    {"IAH", "Houston, TX", "TX", "Texas"},
    {"LAS", "Las Vegas, NV", "NV", "Nevada"},
    {"DTW", "Detroit, MI", "MI", "Michigan"},
    {"SLC", "Salt Lake City, UT", "UT", "Utah"},
    {"MSP", "Minneapolis, MN", "MN", "Minnesota"},
    {"SFO", "San Francisco, CA", "CA", "California"},
    {"EWR", "Newark, NJ", "NJ", "New Jersey"},
    {"CLT", "Charlotte, NC", "NC", "North Carolina"},
    {"MCO", "Orlando, FL", "FL", "Florida"},
    {"BOS", "Boston, MA", "MA", "Massachusetts"},
    {"SEA", "Seattle, WA", "WA", "Washington"},
    {"LGA", "New York, NY", "NY", "New York"},
    {"BWI", "Baltimore, MD", "MD", "Maryland"},
    {"STL", "St. Louis, MO", "MO", "Missouri"},
}};

constexpr const char* kHeader =
    "\"Year\",\"Quarter\",\"Month\",\"DayofMonth\",\"DayOfWeek\",\"FlightDate\",\"UniqueCarrier\",\"AirlineID\","
    "\"Carrier\",\"TailNum\",\"FlightNum\",\"Origin\",\"OriginCityName\",\"OriginState\",\"OriginStateName\","
    "\"Dest\",\"DestCityName\",\"DestState\",\"DestStateName\",\"CRSDepTime\",\"DepTime\",\"DepDelay\","
    "\"DepDelayMinutes\",\"DepDel15\",\"TaxiOut\",\"WheelsOff\",\"WheelsOn\",\"TaxiIn\",\"CRSArrTime\",\"ArrTime\","
    "\"ArrDelay\",\"ArrDelayMinutes\",\"ArrDel15\",\"Cancelled\",\"CancellationCode\",\"Diverted\","
    "\"CRSElapsedTime\",\"ActualElapsedTime\",\"AirTime\",\"Flights\",\"Distance\",\"DistanceGroup\","
    "\"CarrierDelay\",\"WeatherDelay\",\"NASDelay\",\"SecurityDelay\",\"LateAircraftDelay\","
    "\"DivAirportLandings\",\"DivReachedDest\",\"DivActualElapsedTime\",\"DivArrDelay\",\"DivDistance\"";

// Five diversion slots of eight columns each, always empty.
constexpr int kDivSlots = 5;
constexpr int kDivColumnsPerSlot = 8;

std::string hhmm(int minutes_of_day) {
  minutes_of_day = ((minutes_of_day % 1440) + 1440) % 1440;
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d%02d", minutes_of_day / 60, minutes_of_day % 60);
  return buf;
}

std::string fixed2(std::int64_t v) { return std::to_string(v) + ".00"; }

std::string dq(std::string_view s) { return "\"" + std::string(s) + "\""; }

std::int64_t airline_id(std::string_view code) {
  std::int64_t h = 19000;
  for (char c : code) h = (h * 31 + c) % 1000;
  return 19000 + h;
}

}  // namespace

std::vector<CarrierSpec> default_carriers() {
  return {
      {"WN", 0.23, 5, 30}, {"AA", 0.09, 12, 40}, {"OO", 0.08, 6, 35},  {"MQ", 0.07, 10, 38}, {"US", 0.07, 3, 30},
      {"DL", 0.07, 8, 36}, {"UA", 0.07, 11, 42}, {"XE", 0.06, 9, 34},  {"NW", 0.05, 7, 33},  {"CO", 0.05, 13, 41},
      {"EV", 0.04, 14, 44}, {"9E", 0.04, 4, 31}, {"FL", 0.04, 2, 29}, {"YV", 0.04, 15, 45},
  };
}

void GenSpec::validate() const {
  if (files == 0) throw InvalidArgument("gen spec: files must be positive");
  if (rows_per_file == 0) throw InvalidArgument("gen spec: rows_per_file must be positive");
  if (carriers.empty()) throw InvalidArgument("gen spec: no carriers");
  if (!(invalid_fraction >= 0.0 && invalid_fraction < 1.0)) {
    throw InvalidArgument("gen spec: invalid_fraction outside [0, 1)");
  }
  std::set<std::string> seen;
  double total = 0.0;
  for (const auto& c : carriers) {
    if (!is_carrier_code(c.code)) throw InvalidArgument("gen spec: bad carrier code '" + c.code + "'");
    if (!seen.insert(c.code).second) throw InvalidArgument("gen spec: duplicate carrier " + c.code);
    if (!(c.weight > 0.0)) throw InvalidArgument("gen spec: carrier " + c.code + " needs a positive weight");
    if (c.delay_sigma < 0) throw InvalidArgument("gen spec: carrier " + c.code + " has negative sigma");
    total += c.weight;
  }
  if (std::fabs(total - 1.0) > 1e-6) throw InvalidArgument("gen spec: carrier weights must sum to 1");
}

nlohmann::json GenSpec::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : carriers) {
    cs.push_back({{"code", c.code}, {"weight", c.weight}, {"delay_mean", c.delay_mean}, {"delay_sigma", c.delay_sigma}});
  }
  return {{"files", files},
          {"rows_per_file", rows_per_file},
          {"invalid_fraction", invalid_fraction},
          {"seed", seed},
          {"carriers", cs}};
}

GenSpec GenSpec::from_json(const nlohmann::json& j) {
  GenSpec spec;
  try {
    spec.files = j.value("files", spec.files);
    spec.rows_per_file = j.value("rows_per_file", spec.rows_per_file);
    spec.invalid_fraction = j.value("invalid_fraction", spec.invalid_fraction);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("carriers")) {
      spec.carriers.clear();
      for (const auto& c : j.at("carriers")) {
        spec.carriers.push_back({c.at("code").get<std::string>(), c.at("weight").get<double>(),
                                 c.at("delay_mean").get<std::int64_t>(), c.at("delay_sigma").get<std::int64_t>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("gen spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

void Ledger::merge(const Ledger& other) {
  for (const auto& [code, agg] : other.carriers) {
    auto [it, inserted] = carriers.try_emplace(code, core::CarrierAggregate{code, 0, 0});
    core::merge_into(it->second, agg);
  }
  invalid += other.invalid;
  total += other.total;
}

core::RankingResult Ledger::ranking(std::size_t limit) const {
  std::vector<core::CarrierAggregate> aggs;
  for (const auto& [code, agg] : carriers) {
    if (agg.count > 0) aggs.push_back(agg);
  }
  return core::rank_carriers(std::move(aggs), limit);
}

nlohmann::json Ledger::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [code, agg] : carriers) j[code] = {{"delay_sum", agg.delay_sum}, {"count", agg.count}};
  j["invalid"] = invalid;
  j["total"] = total;
  return j;
}

Ledger Ledger::from_json(const nlohmann::json& j) {
  Ledger l;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "invalid") {
        l.invalid = value.get<std::int64_t>();
      } else if (key == "total") {
        l.total = value.get<std::int64_t>();
      } else {
        l.carriers[key] = {key, value.at("delay_sum").get<std::int64_t>(), value.at("count").get<std::int64_t>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("ledger: ") + e.what());
  }
  return l;
}

std::string file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "flights_%02zu.csv", index + 1);
  return buf;
}

GeneratedFile generate_file(const GenSpec& spec, std::size_t index) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);

  std::vector<double> weights;
  for (const auto& c : spec.carriers) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick_carrier(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> pick_airport(0, kAirports.size() - 1);
  std::uniform_int_distribution<int> pick_minute(300, 1380);
  std::uniform_int_distribution<int> pick_flight(1, 7999);
  std::uniform_int_distribution<int> pick_small(3, 30);
  std::uniform_int_distribution<int> pick_dep_delay(-10, 60);
  std::uniform_int_distribution<int> pick_distance(150, 2600);
  std::uniform_int_distribution<int> pick_kind(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t rows = spec.rows_per_file;
  const std::size_t invalid_target = static_cast<std::size_t>(std::llround(spec.invalid_fraction * static_cast<double>(rows)));
  const int year = 2008 + static_cast<int>(index / 12);
  const int month = static_cast<int>(index % 12) + 1;

  GeneratedFile out;
  out.name = file_name(index);
  out.body.reserve(rows * 330 + 1024);
  out.body += kHeader;
  for (int s = 1; s <= kDivSlots; ++s) {
    for (const char* col : {"Airport", "AirportID", "AirportSeqID", "WheelsOn", "TotalElapsedTime",
                            "LongestGTime", "WheelsOff", "TailNum"}) {
      out.body += ",\"Div" + std::to_string(s) + col + "\"";
    }
  }
  out.body += ",\n";

  std::size_t invalid_left = invalid_target;
  std::string row;
  for (std::size_t i = 0; i < rows; ++i) {
    // Selection sampling: exactly invalid_target rows are invalid.
    const bool invalid = invalid_left > 0 && unit(rng) * static_cast<double>(rows - i) < static_cast<double>(invalid_left);
    if (invalid) --invalid_left;

    const CarrierSpec& carrier = spec.carriers[pick_carrier(rng)];
    const Airport& origin = kAirports[pick_airport(rng)];
    const Airport* dest = &kAirports[pick_airport(rng)];
    if (dest == &origin) dest = &kAirports[(pick_airport(rng) + 1) % kAirports.size()];
    const int day = static_cast<int>(i % 28) + 1;
    const int crs_dep = pick_minute(rng);
    const int dep_delay = pick_dep_delay(rng);
    const int taxi_out = pick_small(rng);
    const int taxi_in = pick_small(rng) / 3 + 2;
    const int distance = pick_distance(rng);
    const int crs_elapsed = distance / 8 + 35;

    std::int64_t arr_delay = 0;
    int kind = 0;  // 0 cancelled, 1 diverted, 2 delay not reported
    if (invalid) {
      kind = pick_kind(rng);
    } else {
      std::normal_distribution<double> delay(static_cast<double>(carrier.delay_mean),
                                             static_cast<double>(carrier.delay_sigma));
      arr_delay = carrier.delay_sigma > 0 ? std::llround(delay(rng)) : carrier.delay_mean;
      auto [it, inserted] = out.ledger.carriers.try_emplace(carrier.code, core::CarrierAggregate{carrier.code, 0, 0});
      it->second.delay_sum += arr_delay;
      it->second.count += 1;
    }
    const bool cancelled = invalid && kind == 0;
    const int actual_elapsed = crs_elapsed + static_cast<int>(arr_delay) - dep_delay;

    row.clear();
    row += std::to_string(year) + ',' + std::to_string((month - 1) / 3 + 1) + ',' + std::to_string(month) + ',' +
           std::to_string(day) + ',' + std::to_string((day + 1) % 7 + 1) + ',';
    char date[48];
    std::snprintf(date, sizeof date, "%04d-%02d-%02d", year, month, day);
    row += date;
    row += ',' + dq(carrier.code) + ',' + std::to_string(airline_id(carrier.code)) + ',' + dq(carrier.code) +
           ',' + dq("N" + std::to_string(100 + pick_flight(rng) % 900) + carrier.code) + ',' +
           std::to_string(pick_flight(rng)) + ',';
    row += dq(origin.code) + ',' + dq(origin.city) + ',' + dq(origin.state) + ',' +
           dq(origin.state_name) + ',';
    row += dq(dest->code) + ',' + dq(dest->city) + ',' + dq(dest->state) + ',' +
           dq(dest->state_name) + ',';
    row += dq(hhmm(crs_dep)) + ',';
    if (cancelled) {
      row += ",,,,,,,,";
    } else {
      row += dq(hhmm(crs_dep + dep_delay)) + ',' + fixed2(dep_delay) + ',' + fixed2(std::max(0, dep_delay)) + ',' +
             (dep_delay >= 15 ? "1.00" : "0.00") + ',' + fixed2(taxi_out) + ',' +
             dq(hhmm(crs_dep + dep_delay + taxi_out)) + ',' +
             dq(hhmm(crs_dep + dep_delay + taxi_out + actual_elapsed - taxi_out - taxi_in)) + ',' +
             fixed2(taxi_in) + ',';
    }
    row += dq(hhmm(crs_dep + crs_elapsed)) + ',';
    if (invalid) {
      row += ",,,,";
    } else {
      row += dq(hhmm(crs_dep + crs_elapsed + static_cast<int>(arr_delay))) + ',' + fixed2(arr_delay) + ',' +
             fixed2(std::max<std::int64_t>(0, arr_delay)) + ',' + (arr_delay >= 15 ? "1.00" : "0.00") + ',';
    }
    row += cancelled ? "1.00," : "0.00,";
    row += cancelled ? dq(std::string(1, static_cast<char>('A' + i % 3))) + ',' : std::string(",");
    row += (invalid && kind == 1) ? "1.00," : "0.00,";
    row += fixed2(crs_elapsed) + ',';
    row += invalid ? std::string(",,") : fixed2(actual_elapsed) + ',' + fixed2(actual_elapsed - taxi_out - taxi_in) + ',';
    row += "1.00," + fixed2(distance) + ',' + std::to_string(std::min(11, distance / 250 + 1)) + ',';
    if (!invalid && arr_delay >= 15) {
      row += fixed2(arr_delay / 2) + ",0.00," + fixed2(arr_delay - arr_delay / 2) + ",0.00,0.00,";
    } else {
      row += ",,,,,";
    }
    row += invalid && kind == 1 ? "1,0,,,," : "0,,,,,";
    row.append(static_cast<std::size_t>(kDivSlots * kDivColumnsPerSlot), ',');
    row += '\n';
    out.body += row;

    ++out.ledger.total;
    if (invalid) ++out.ledger.invalid;
  }
  return out;
}

Dataset generate_dataset(const GenSpec& spec, storage::ObjectStore& sink) {
  spec.validate();
  Dataset ds;
  for (std::size_t i = 0; i < spec.files; ++i) {
    GeneratedFile f = generate_file(spec, i);
    ds.files.push_back(f.name);
    ds.ledger.merge(f.ledger);
    ds.per_file.push_back(f.ledger);
    sink.put(f.name, std::move(f.body));
  }
  return ds;
}

Dataset generate_dataset(const GenSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir);
  Dataset ds;
  for (std::size_t i = 0; i < spec.files; ++i) {
    GeneratedFile f = generate_file(spec, i);
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + (dir / f.name).string());
    out << f.body;
    ds.files.push_back(f.name);
    ds.ledger.merge(f.ledger);
    ds.per_file.push_back(f.ledger);
  }
  std::ofstream(dir / "ledger.json", std::ios::binary) << ds.ledger.to_json().dump(2) << '\n';
  std::ofstream(dir / "spec.json", std::ios::binary) << spec.to_json().dump(2) << '\n';
  return ds;
}

}  // namespace microreduce::data
