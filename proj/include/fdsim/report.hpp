#pragma once

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fdsim/results.hpp"
#include "fdsim/stats.hpp"

namespace fdsim {

// Everything here reads only the raw CSVs, so tables can be rebuilt offline.

struct PercentileRow {
  std::string algorithm;
  double reduction = 0.0;
  int n = 0;
  double p50 = 0.0, p90 = 0.0, mean = 0.0;
};

inline std::map<std::pair<std::string, double>, std::vector<double>> group_runs(const CsvTable& runs,
                                                                                const std::string& metric) {
  std::map<std::pair<std::string, double>, std::vector<double>> g;
  for (std::size_t i = 0; i < runs.size(); ++i)
    g[{runs.str(i, "algorithm"), runs.num(i, "reduction_target")}].push_back(runs.num(i, metric));
  return g;
}

inline std::vector<PercentileRow> percentile_table(const CsvTable& runs, const std::string& metric = "failure_rate") {
  std::vector<PercentileRow> out;
  for (const auto& [key, v] : group_runs(runs, metric))
    out.push_back({key.first, key.second, static_cast<int>(v.size()), percentile(v, 50), percentile(v, 90), mean(v)});
  return out;
}

struct EcdfRow {
  std::string algorithm;
  double reduction = 0.0;
  std::string metric;
  double value = 0.0;
  double fraction = 0.0;  // share of experiments with metric <= value
};

inline std::vector<EcdfRow> ecdf_table(const CsvTable& runs, const std::vector<std::string>& metrics) {
  std::vector<EcdfRow> out;
  for (const auto& metric : metrics) {
    for (auto& [key, v] : group_runs(runs, metric)) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
        out.push_back({key.first, key.second, metric, v[i], static_cast<double>(i + 1) / v.size()});
      }
    }
  }
  return out;
}

inline const std::vector<std::string>& default_ecdf_metrics() {
  static const std::vector<std::string> m = {"failure_rate", "table_overhead", "link_overhead", "ctrl_overhead"};
  return m;
}

struct RuntimeRow {
  std::string algorithm;
  std::string step;
  int n = 0;
  double p50 = 0.0, p90 = 0.0, p99 = 0.0, max = 0.0;
  double mean_modeling = 0.0, mean_solving = 0.0;
  double below_128ms = 0.0;
};

// Per sample: modeling + solving wall clock.
inline std::vector<RuntimeRow> runtime_table(const CsvTable& timings) {
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> g;
  for (std::size_t i = 0; i < timings.size(); ++i)
    g[{timings.str(i, "algorithm"), timings.str(i, "step")}].push_back(
        {timings.num(i, "modeling_ms"), timings.num(i, "solving_ms")});
  std::vector<RuntimeRow> out;
  for (const auto& [key, samples] : g) {
    std::vector<double> total, modeling, solving;
    for (auto [m, s] : samples) {
      total.push_back(m + s);
      modeling.push_back(m);
      solving.push_back(s);
    }
    RuntimeRow r;
    r.algorithm = key.first;
    r.step = key.second;
    r.n = static_cast<int>(total.size());
    r.p50 = percentile(total, 50);
    r.p90 = percentile(total, 90);
    r.p99 = percentile(total, 99);
    r.max = percentile(total, 100);
    r.mean_modeling = mean(modeling);
    r.mean_solving = mean(solving);
    r.below_128ms = ecdf_at(total, 128.0);
    out.push_back(r);
  }
  return out;
}

inline void write_percentile_csv(std::ostream& os, const std::vector<PercentileRow>& rows) {
  os << "algorithm,reduction_target,n,p50,p90,mean\n";
  for (const auto& r : rows)
    os << r.algorithm << ',' << fmt_num(r.reduction) << ',' << r.n << ',' << fmt_num(r.p50) << ',' << fmt_num(r.p90)
       << ',' << fmt_num(r.mean) << '\n';
}

inline void write_ecdf_csv(std::ostream& os, const std::vector<EcdfRow>& rows) {
  os << "algorithm,reduction_target,metric,value,fraction\n";
  for (const auto& r : rows)
    os << r.algorithm << ',' << fmt_num(r.reduction) << ',' << r.metric << ',' << fmt_num(r.value) << ','
       << fmt_num(r.fraction) << '\n';
}

inline void write_runtime_csv(std::ostream& os, const std::vector<RuntimeRow>& rows) {
  os << "algorithm,step,n,p50_ms,p90_ms,p99_ms,max_ms,mean_modeling_ms,mean_solving_ms,below_128ms\n";
  for (const auto& r : rows)
    os << r.algorithm << ',' << r.step << ',' << r.n << ',' << fmt_num(r.p50) << ',' << fmt_num(r.p90) << ','
       << fmt_num(r.p99) << ',' << fmt_num(r.max) << ',' << fmt_num(r.mean_modeling) << ','
       << fmt_num(r.mean_solving) << ',' << fmt_num(r.below_128ms) << '\n';
}

}  // namespace fdsim
