#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdsim/corpus.hpp"
#include "fdsim/engine.hpp"
#include "fdsim/results.hpp"
#include "fdsim/scenario_io.hpp"

namespace fdsim {

inline std::string to_string(AssignmentMode m) { return m == AssignmentMode::kFull ? "full" : "stable"; }
inline AssignmentMode parse_assignment_mode(const std::string& s) {
  if (s == "stable") return AssignmentMode::kStable;
  if (s == "full") return AssignmentMode::kFull;
  throw std::invalid_argument("unknown assignment mode '" + s + "'");
}
inline std::string to_string(CapacityMode m) { return m == CapacityMode::kPerSwitch ? "per-switch" : "uniform"; }
inline CapacityMode parse_capacity_mode(const std::string& s) {
  if (s == "uniform") return CapacityMode::kUniform;
  if (s == "per-switch") return CapacityMode::kPerSwitch;
  throw std::invalid_argument("unknown capacity mode '" + s + "'");
}
inline std::string to_string(FailureNormalization f) {
  return f == FailureNormalization::kRuleCount ? "rule-count" : "rule-slots";
}
inline FailureNormalization parse_failure_normalization(const std::string& s) {
  if (s == "rule-slots") return FailureNormalization::kRuleSlots;
  if (s == "rule-count") return FailureNormalization::kRuleCount;
  throw std::invalid_argument("unknown failure normalization '" + s + "'");
}

struct ExperimentConfig {
  std::vector<std::string> scenarios;  // scenario files
  int generate_count = 0;              // plus this many corpus scenarios built in memory
  std::uint64_t seed = 1;              // master seed of the generated corpus
  CorpusRanges ranges;
  std::vector<Algorithm> algorithms{Algorithm::kHeuristic};
  int horizon = 3;
  CostWeights weights;
  GreedyThresholds greedy;
  AssignmentMode rs_mode = AssignmentMode::kStable;
  CapacityMode capacity_mode = CapacityMode::kUniform;
  FailureNormalization failure_normalization = FailureNormalization::kRuleSlots;
  std::vector<double> grid;  // capacity reductions in percent
  std::string out_dir = "results";
  int jobs = 1;
  bool verify = false;

  void validate() const {
    if (scenarios.empty() && generate_count <= 0) throw std::invalid_argument("no scenario source given");
    if (generate_count < 0) throw std::invalid_argument("generate count must be >= 0");
    for (double g : grid)
      if (!(g > 0.0 && g < 100.0)) throw std::invalid_argument("reduction grid values must lie in (0, 100)");
    if (algorithms.empty()) throw std::invalid_argument("no algorithm given");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    if (!(greedy.lower <= greedy.upper)) throw std::invalid_argument("greedy lower threshold above upper");
    ranges.validate();
    for (Algorithm a : algorithms) engine_config(a).validate();
  }

  EngineConfig engine_config(Algorithm a) const {
    EngineConfig e;
    e.algorithm = a;
    e.horizon = horizon;
    e.weights = weights;
    e.greedy = greedy;
    e.rs.mode = rs_mode;
    e.failure_normalization = failure_normalization;
    e.record_timeseries = false;
    e.verify = verify;
    return e;
  }

  int scenario_count() const { return static_cast<int>(scenarios.size()) + generate_count; }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json algos = nlohmann::json::array();
  for (Algorithm a : c.algorithms) algos.push_back(to_string(a));
  const auto& r = c.ranges;
  return {{"scenarios", c.scenarios},
          {"generate_count", c.generate_count},
          {"seed", c.seed},
          {"corpus_ranges",
           {{"switches", {r.switches_min, r.switches_max}},
            {"ba_m", {r.ba_m_min, r.ba_m_max}},
            {"hosts_per_switch", {r.hosts_min, r.hosts_max}},
            {"n_pairs", {r.pairs_min, r.pairs_max}},
            {"n_iat_scale", {r.iat_scale_min, r.iat_scale_max}},
            {"n_bneck", {r.bneck_min, r.bneck_max}},
            {"n_bneck_intensity", {r.intensity_min, r.intensity_max}},
            {"n_bneck_duration", {r.duration_min, r.duration_max}},
            {"n_hs", {r.hotspots_min, r.hotspots_max}}}},
          {"algorithms", algos},
          {"horizon", c.horizon},
          {"weights",
           {{"table", c.weights.table}, {"link", c.weights.link}, {"ctrl", c.weights.ctrl},
            {"normalize", c.weights.normalize}}},
          {"greedy", {{"upper", c.greedy.upper}, {"lower", c.greedy.lower}}},
          {"rs_mode", to_string(c.rs_mode)},
          {"capacity_mode", to_string(c.capacity_mode)},
          {"failure_normalization", to_string(c.failure_normalization)},
          {"grid", c.grid},
          {"out_dir", c.out_dir},
          {"jobs", c.jobs},
          {"verify", c.verify}};
}

// Scenario i of a sweep: files first, then generated corpus entries.
inline Scenario load_sweep_scenario(const ExperimentConfig& c, int i, std::string* name) {
  if (i < static_cast<int>(c.scenarios.size())) {
    const auto& path = c.scenarios[static_cast<std::size_t>(i)];
    if (name) *name = std::filesystem::path(path).stem().string();
    return load_scenario(path);
  }
  const int k = i - static_cast<int>(c.scenarios.size());
  if (name) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "corpus-%05d", k);
    *name = buf;
  }
  return generate_corpus_scenario(c.ranges, c.seed, k);
}

struct SweepResult {
  std::vector<ExperimentKey> keys;
  std::vector<RunReport> reports;
  std::vector<std::vector<TimingSample>> timings;
};

// Experiments are (scenario, reduction, algorithm) triples numbered in that
// nesting order. Workers take whole scenarios so each is built once; results
// land at their experiment id, so the merge does not depend on scheduling.
inline SweepResult run_sweep(const ExperimentConfig& c,
                             const std::function<void(int done, int total)>& progress = nullptr) {
  c.validate();
  const int n_sc = c.scenario_count();
  const int n_grid = static_cast<int>(c.grid.size());
  const int n_alg = static_cast<int>(c.algorithms.size());
  const std::size_t total = static_cast<std::size_t>(n_sc) * n_grid * n_alg;
  SweepResult out;
  out.keys.resize(total);
  out.reports.resize(total);
  out.timings.resize(total);
  if (total == 0) return out;

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_sc) return;
      {
        std::lock_guard<std::mutex> lock(err_mu);
        if (err) return;
      }
      try {
        std::string name;
        const Scenario base = load_sweep_scenario(c, i, &name);
        for (int g = 0; g < n_grid; ++g) {
          Scenario sc = base;
          apply_capacity_reduction(sc, c.grid[static_cast<std::size_t>(g)], c.capacity_mode);
          for (int a = 0; a < n_alg; ++a) {
            const auto id = static_cast<std::size_t>((i * n_grid + g) * n_alg + a);
            RunResult r = run_experiment(sc, c.engine_config(c.algorithms[static_cast<std::size_t>(a)]));
            out.keys[id] = {static_cast<int>(id), name, base.seed, c.grid[static_cast<std::size_t>(g)]};
            out.reports[id] = r.report;
            out.timings[id] = std::move(r.timings);
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
      const int d = ++done;
      if (progress) progress(d, n_sc);
    }
  };
  const int n_workers = std::min(c.jobs, n_sc);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
}

inline std::string runs_csv(const SweepResult& r) {
  std::ostringstream os;
  write_runs_csv(os, r.keys, r.reports);
  return os.str();
}

inline std::string timings_csv(const SweepResult& r) {
  std::ostringstream os;
  write_timings_header(os);
  for (std::size_t i = 0; i < r.keys.size(); ++i)
    write_timings_rows(os, r.keys[i].experiment, r.reports[i].algorithm, r.timings[i]);
  return os.str();
}

// runs.csv (deterministic), timings.csv (wall clock) and manifest.json.
inline void write_sweep(const std::filesystem::path& dir, const ExperimentConfig& c, const SweepResult& r) {
  std::filesystem::create_directories(dir);
  write_text(dir / "runs.csv", runs_csv(r));
  write_text(dir / "timings.csv", timings_csv(r));
  nlohmann::json scen = nlohmann::json::array();
  std::vector<std::string> seen;
  for (const auto& k : r.keys) {
    if (!seen.empty() && seen.back() == k.scenario) continue;
    seen.push_back(k.scenario);
    scen.push_back({{"name", k.scenario}, {"seed", k.scenario_seed}});
  }
  nlohmann::json manifest = {{"format_version", 1},
                             {"config", config_to_json(c)},
                             {"experiments", r.keys.size()},
                             {"scenarios", scen},
                             {"files", {{"runs", "runs.csv"}, {"timings", "timings.csv"}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace fdsim
