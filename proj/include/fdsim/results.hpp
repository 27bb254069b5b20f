#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdsim/engine.hpp"

namespace fdsim {

// Shortest round-trip-safe enough text for a double; fixed so reruns are byte-identical.
inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') c = '_';
  return s;
}

// Identity of one sweep experiment; `experiment` orders the merged output.
struct ExperimentKey {
  int experiment = 0;
  std::string scenario;
  std::uint64_t scenario_seed = 0;
  double reduction_target = 0.0;
};

inline const std::vector<std::string>& run_columns() {
  static const std::vector<std::string> cols = {
      "experiment",        "scenario",           "scenario_seed",        "algorithm",
      "horizon",           "reduction_target",   "capacity_reduction",   "slots",
      "bottlenecked_switches", "failure_rate",   "failure_rate_relocated", "table_overhead",
      "link_overhead",     "ctrl_overhead",      "ctrl_p50",             "ctrl_p90",
      "ctrl_max",          "total_rule_slots",   "relocated_rule_slots", "bs_rule_slots",
      "overflow_rule_slots", "ctrl_messages",    "dt_select_calls",      "rs_alloc_calls",
      "infeasible_selections", "exact_fallbacks", "downgraded_jobs",     "truncated_allocations",
      "census_violations",
      "capacity_violations"};
  return cols;
}

inline std::string run_row(const ExperimentKey& k, const RunReport& r) {
  const std::vector<std::string> f = {std::to_string(k.experiment),
                                      csv_field(k.scenario),
                                      std::to_string(k.scenario_seed),
                                      to_string(r.algorithm),
                                      std::to_string(r.horizon),
                                      fmt_num(k.reduction_target),
                                      fmt_num(r.capacity_reduction),
                                      std::to_string(r.slots),
                                      std::to_string(r.bottlenecked_switches),
                                      fmt_num(r.failure_rate),
                                      fmt_num(r.failure_rate_relocated),
                                      fmt_num(r.table_overhead),
                                      fmt_num(r.link_overhead),
                                      fmt_num(r.ctrl_overhead),
                                      fmt_num(r.ctrl_p50),
                                      fmt_num(r.ctrl_p90),
                                      fmt_num(r.ctrl_max),
                                      std::to_string(r.total_rule_slots),
                                      std::to_string(r.relocated_rule_slots),
                                      std::to_string(r.bs_rule_slots),
                                      std::to_string(r.overflow_rule_slots),
                                      std::to_string(r.ctrl_messages),
                                      std::to_string(r.dt_select_calls),
                                      std::to_string(r.rs_alloc_calls),
                                      std::to_string(r.infeasible_selections),
                                      std::to_string(r.exact_fallbacks),
                                      std::to_string(r.downgraded_jobs),
                                      std::to_string(r.truncated_allocations),
                                      std::to_string(r.census_violations),
                                      std::to_string(r.capacity_violations)};
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + f[i];
  return line;
}

inline std::string join_columns(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

inline void write_runs_csv(std::ostream& os, const std::vector<ExperimentKey>& keys,
                           const std::vector<RunReport>& reports) {
  if (keys.size() != reports.size()) throw std::invalid_argument("keys and reports differ in length");
  os << join_columns(run_columns()) << '\n';
  for (std::size_t i = 0; i < keys.size(); ++i) os << run_row(keys[i], reports[i]) << '\n';
}

inline void write_timeseries_csv(std::ostream& os, const std::vector<SlotRecord>& ts) {
  os << "slot,switch,utilization,relocated,hosted,aggregation,backflow,bs_rules\n";
  for (const auto& r : ts)
    os << r.slot << ',' << r.sw << ',' << r.utilization << ',' << r.relocated << ',' << r.hosted << ','
       << r.aggregation << ',' << r.backflow << ',' << r.bs_rules << '\n';
}

inline const std::vector<std::string>& timing_columns() {
  static const std::vector<std::string> cols = {"experiment", "algorithm",   "period",     "switch",
                                                "step",       "size",        "modeling_ms", "solving_ms"};
  return cols;
}

inline void write_timings_header(std::ostream& os) { os << join_columns(timing_columns()) << '\n'; }

inline void write_timings_rows(std::ostream& os, int experiment, Algorithm algo, const std::vector<TimingSample>& ts) {
  for (const auto& t : ts)
    os << experiment << ',' << to_string(algo) << ',' << t.period << ',' << t.sw << ',' << t.step << ',' << t.size
       << ',' << fmt_num(t.modeling_ms) << ',' << fmt_num(t.solving_ms) << '\n';
}

// Header-addressed CSV table without quoting; enough for the files written above.
class CsvTable {
 public:
  static CsvTable parse(std::istream& is) {
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty csv");
    t.header_ = split(line);
    for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_[t.header_[i]] = i;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto row = split(line);
      if (row.size() != t.header_.size())
        throw std::runtime_error("csv row has " + std::to_string(row.size()) + " fields, expected " +
                                 std::to_string(t.header_.size()));
      t.rows_.push_back(std::move(row));
    }
    return t;
  }

  static CsvTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return parse(in);
  }

  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  bool has(const std::string& col) const { return index_.count(col) > 0; }

  const std::string& str(std::size_t row, const std::string& col) const { return rows_.at(row).at(column(col)); }
  double num(std::size_t row, const std::string& col) const { return std::stod(str(row, col)); }

 private:
  std::size_t column(const std::string& col) const {
    auto it = index_.find(col);
    if (it == index_.end()) throw std::runtime_error("csv has no column '" + col + "'");
    return it->second;
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  }

  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace fdsim
