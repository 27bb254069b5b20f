// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fdsim/corpus.hpp"
#include "fdsim/cover_set.hpp"
#include "fdsim/dt_select.hpp"
#include "fdsim/engine.hpp"
#include "fdsim/experiment.hpp"
#include "fdsim/mckp.hpp"
#include "fdsim/report.hpp"
#include "fdsim/results.hpp"
#include "fdsim/scenario_io.hpp"
#include "fdsim/stats.hpp"
#include "support/cover_oracle.hpp"
#include "support/dt_fixtures.hpp"

using namespace fdsim;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void verdict(int id, bool ok, const std::string& what) {
  std::printf("%s [%d] %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- 1

Match random_match(std::mt19937_64& rng, const Domain& d, double wildcard_p) {
  std::bernoulli_distribution wild(wildcard_p);
  Match m;
  for (std::size_t i = 0; i < kNumFields; ++i) {
    const auto f = static_cast<Field>(i);
    if (!wild(rng)) m = m.with(f, std::uniform_int_distribution<int>(0, d.size(f) - 1)(rng));
  }
  return m;
}

void criterion_cover_set() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  long long violations = 0;
  std::size_t largest = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    // Three fields whose product stays <= 4096.
    Domain d{{uni(1, 16), uni(1, 16), uni(1, 16)}};
    largest = std::max(largest, d.universe_size());
    std::vector<FlowRule> table;
    const int n = uni(0, 50);
    for (int i = 0; i < n; ++i) {
      FlowRule f;
      f.id = i;
      f.match = random_match(rng, d, 0.4);
      f.priority = uni(0, 8);
      f.install_time = 0.0;
      f.remove_time = 10.0;
      table.push_back(f);
    }
    const int agg_prio = uni(0, 9);
    const CoverSet cs = cover_set(random_match(rng, d, 0.6), agg_prio, table, d);
    violations += static_cast<long long>(testing::check_cover_set(table, cs, agg_prio, d).size());
  }
  const double s = seconds_since(t0);
  verdict(1, violations == 0 && s < 10.0,
          "cover-set oracle equivalence: 1000 tables (<=50 rules, universe <= " + std::to_string(largest) + "), " +
              std::to_string(violations) + " violations, " + fmt("%.2f s", s) + " (limit 10 s)");
}

// ---- 2

MckpInstance random_mckp(std::mt19937_64& rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  MckpInstance inst;
  const int dims = uni(0, 5);
  const int sets = uni(0, 12);
  for (int s = 0; s < sets; ++s) {
    std::vector<MckpItem> items;
    const int k = uni(1, 4);
    for (int i = 0; i < k; ++i) {
      MckpItem it{static_cast<double>(uni(0, 30)), {}};
      for (int d = 0; d < dims; ++d) it.weights.push_back(uni(-6, 10));
      items.push_back(it);
    }
    inst.choice_sets.push_back(items);
  }
  for (int d = 0; d < dims; ++d) inst.capacity.push_back(uni(-5, 3 * sets + 5));
  return inst;
}

void criterion_knapsack() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2002);
  int matched = 0, feasible = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    const auto inst = random_mckp(rng);
    const auto bf = solve_brute_force(inst, 2e7);  // 4^12 fits
    const auto ex = solve_exact(inst);
    bool ok = bf.feasible == ex.feasible && ex.optimal;
    if (ok && bf.feasible) {
      ++feasible;
      ok = std::abs(bf.objective - ex.objective) <= 1e-9 && is_feasible_selection(inst, ex.chosen);
    }
    matched += ok;
  }
  const double s = seconds_since(t0);
  verdict(2, matched == 1000 && s < 30.0,
          "knapsack exactness: " + std::to_string(matched) + "/1000 match brute force (" + std::to_string(feasible) +
              " feasible), " + fmt("%.2f s", s) + " (limit 30 s)");
}

// ---- 3

// Independent feasibility: some held selection fits every slot by replay.
bool replay_feasible(const DtProblem& p) {
  const std::size_t n = p.templates.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<TemplateId> sel;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) sel.push_back(p.templates[i].id);
    const auto u = testing::replay_utilization(p, sel);
    if (std::all_of(u.begin(), u.end(), [&](int x) { return x <= p.capacity; })) return true;
  }
  return false;
}

std::vector<DtCoefficients> coefficients_of(const DtProblem& p) {
  std::vector<DtCoefficients> out;
  for (const auto& d : p.templates) out.push_back(compute_coefficients(d, p.t1, p.horizon));
  return out;
}

void criterion_sandwich() {
  std::mt19937_64 rng(3003);
  int instances = 0, violations = 0, single_slot = 0, drawn = 0;
  while (instances < 500) {
    ++drawn;
    auto fx = testing::random_dt_fixture(rng, 10, 4);
    const auto& p = fx.problem;
    if (!replay_feasible(p)) continue;
    ++instances;
    const auto h = solve_heuristic(p, coefficients_of(p));
    bool ok = h.feasible;
    if (ok) {
      const auto u = testing::replay_utilization(p, h.selected);
      for (int k = 0; k < p.horizon; ++k) ok = ok && u[static_cast<std::size_t>(k)] <= p.capacity;
      const auto ex = solve_exact_baseline(p);
      ok = ok && ex.feasible && ex.objective <= h.objective + 1e-9;
      if (p.horizon == 1) {
        ++single_slot;
        ok = ok && std::abs(ex.objective - h.objective) <= 1e-9;
      }
    }
    violations += !ok;
  }
  verdict(3, violations == 0,
          "DT-Select sandwich: 500 feasible instances (|D|<=10, |T|<=4, " + std::to_string(single_slot) +
              " with |T|=1, " + std::to_string(drawn) + " drawn), " + std::to_string(violations) + " violations");
}

// ---- 4

void criterion_coefficients() {
  std::mt19937_64 rng(4004);
  int mismatches = 0, templates = 0;
  for (int i = 0; i < 1000; ++i) {
    auto fx = testing::random_dt_fixture(rng, 4, 5);
    const auto& p = fx.problem;
    for (const auto& d : p.templates) {
      ++templates;
      const auto c = compute_coefficients(d, p.t1, p.horizon);
      const auto r = testing::replay_coefficients(d, p.t1, p.horizon);
      const bool ints = c.u01 == r.u01 && c.u11 == r.u11 && c.w_table01 == r.table01 && c.w_ctrl01 == r.ctrl01 &&
                        c.w_ctrl10 == r.ctrl10 && c.w_ctrl11 == r.ctrl11;
      auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
      mismatches += !(ints && rel(c.w_link01, r.link01) && rel(c.w_link11, r.link11));
    }
  }
  verdict(4, mismatches == 0,
          "coefficient replay: 1000 fixtures (" + std::to_string(templates) + " templates), " +
              std::to_string(mismatches) + " mismatches (u, w_table, w_ctrl exact; w_link rel 1e-9)");
}

// ---- 5

void criterion_conservation() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5005);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  long long census = 0, capacity = 0;
  std::size_t max_rules = 0;
  int max_switches = 0, runs = 0;
  for (int i = 0; i < 50; ++i) {
    TopologyParams tp;
    tp.n_switches = uni(4, 20);
    tp.ba_m = uni(1, 2);
    ScenarioParams sp;
    sp.n_pairs = uni(1000, 5000);
    sp.n_iat_scale = 10000.0 / sp.n_pairs;
    sp.n_bneck = uni(1, 3);
    Scenario sc = generate_scenario(tp, sp, derive_seed(5005, static_cast<std::uint64_t>(i)));
    max_rules = std::max(max_rules, sc.rules.size());
    max_switches = std::max(max_switches, sc.topology.num_switches());
    apply_capacity_reduction(sc, 10.0 + 10.0 * (i % 5));
    for (Algorithm alg : {Algorithm::kHeuristic, Algorithm::kGreedy}) {
      EngineConfig cfg;
      cfg.algorithm = alg;
      cfg.verify = true;
      cfg.record_timeseries = false;
      const auto r = run_experiment(sc, cfg).report;
      census += r.census_violations;
      capacity += r.capacity_violations;
      ++runs;
    }
  }
  verdict(5, census == 0 && capacity == 0 && max_rules <= 20000 && max_switches <= 20,
          "conservation: 50 scenarios (<= " + std::to_string(max_switches) + " switches, <= " +
              std::to_string(max_rules) + " rules), " + std::to_string(runs) + " runs, census violations " +
              std::to_string(census) + ", capacity violations outside BS " + std::to_string(capacity) + ", " +
              fmt("%.1f s", seconds_since(t0)));
}

// ---- 6, 7, 8

struct CorpusRuns {
  std::vector<ExperimentKey> keys;
  std::vector<RunReport> reports;
  std::vector<TimingSample> dt_samples;
  std::vector<RunReport> normalized;  // heuristic at 20% with max-normalized weights
};

constexpr int kCorpusSize = 200;
const std::vector<double> kGrid = {5, 10, 20, 30, 50};

CorpusRuns run_corpus(double* seconds) {
  const auto t0 = Clock::now();
  CorpusRuns out;
  const CorpusRanges ranges;
  int id = 0;
  for (int i = 0; i < kCorpusSize; ++i) {
    const Scenario base = generate_corpus_scenario(ranges, 606, i);
    char name[32];
    std::snprintf(name, sizeof name, "corpus-%05d", i);
    for (double x : kGrid) {
      Scenario sc = base;
      apply_capacity_reduction(sc, x);
      std::vector<Algorithm> algs{Algorithm::kHeuristic};
      if (x == 20.0) algs.push_back(Algorithm::kGreedy);
      for (Algorithm alg : algs) {
        EngineConfig cfg;
        cfg.algorithm = alg;
        cfg.record_timeseries = false;
        RunResult r = run_experiment(sc, cfg);
        for (const auto& t : r.timings)
          if (t.step == "dt_select") out.dt_samples.push_back(t);
        out.keys.push_back({id++, name, base.seed, x});
        out.reports.push_back(r.report);
      }
      if (x == 20.0) {
        EngineConfig cfg;
        cfg.weights.normalize = true;
        cfg.record_timeseries = false;
        out.normalized.push_back(run_experiment(sc, cfg).report);
      }
    }
  }
  *seconds = seconds_since(t0);
  return out;
}

void criterion_failure_shape(const CorpusRuns& c, double seconds) {
  // Statistics come from the CSV, as the report command would compute them.
  std::istringstream is(runs_csv(SweepResult{c.keys, c.reports, {}}));
  const auto rows = percentile_table(CsvTable::parse(is));
  std::vector<double> p50, p90;
  for (double x : kGrid)
    for (const auto& r : rows)
      if (r.algorithm == "heuristic" && r.reduction == x) {
        p50.push_back(r.p50);
        p90.push_back(r.p90);
      }
  bool ok = p50.size() == kGrid.size();
  std::string curve;
  int inversions = 0;
  bool small_inversions = true;
  if (ok) {
    for (std::size_t k = 0; k < kGrid.size(); ++k) {
      curve += (k ? " " : "") + fmt("%g:", kGrid[k]) + fmt("%.3g", p50[k]) + "/" + fmt("%.3g", p90[k]);
      if (k > 0 && p90[k] < p90[k - 1]) {
        ++inversions;
        small_inversions = small_inversions && p90[k - 1] - p90[k] <= 0.05;
      }
    }
    ok = p50[0] == 0.0 && p50[1] == 0.0 && p50[4] > 0.0 && inversions <= 1 && small_inversions && seconds < 1800.0;
  }
  verdict(6, ok,
          "failure-rate shape: " + std::to_string(kCorpusSize) + " scenarios, failure % p50/p90 by reduction {" + curve +
              "}, p90 inversions " + std::to_string(inversions) + ", corpus runtime " + fmt("%.0f s", seconds) +
              " (limit 1800 s)");
}

void criterion_baseline(const CorpusRuns& c) {
  int n = 0, link_wins = 0, ctrl_wins = 0, table_greedy = 0, norm_link = 0, norm_ctrl = 0;
  for (std::size_t i = 0; i + 1 < c.reports.size(); ++i) {
    const auto& h = c.reports[i];
    const auto& g = c.reports[i + 1];
    if (c.keys[i].reduction_target != 20.0 || h.algorithm != Algorithm::kHeuristic ||
        g.algorithm != Algorithm::kGreedy)
      continue;
    if (static_cast<std::size_t>(n) < c.normalized.size()) {
      const auto& w = c.normalized[static_cast<std::size_t>(n)];
      norm_link += w.link_overhead <= g.link_overhead;
      norm_ctrl += w.ctrl_overhead <= g.ctrl_overhead;
    }
    ++n;
    link_wins += h.link_overhead <= g.link_overhead;
    ctrl_wins += h.ctrl_overhead <= g.ctrl_overhead;
    table_greedy += g.table_overhead < h.table_overhead;
  }
  const double fl = n ? static_cast<double>(link_wins) / n : 0.0;
  const double fc = n ? static_cast<double>(ctrl_wins) / n : 0.0;
  // Not part of the verdict: the same comparison with max-normalized weights.
  std::printf("     with max-normalized cost weights: heuristic link <= greedy in %.1f%%, ctrl <= greedy in %.1f%%\n",
              100.0 * norm_link / std::max(1, n), 100.0 * norm_ctrl / std::max(1, n));
  verdict(7, n == kCorpusSize && fl >= 0.8 && fc >= 0.8,
          "baseline dominance at 20% (default raw cost sum): heuristic link <= greedy in " + fmt("%.1f%%", 100 * fl) +
              ", ctrl <= greedy in " + fmt("%.1f%%", 100 * fc) + " of " + std::to_string(n) +
              " scenarios (need 80%); greedy lower table in " + fmt("%.1f%%", 100.0 * table_greedy / std::max(1, n)));
}

void criterion_runtime(const CorpusRuns& c) {
  std::vector<TimingSample> samples = c.dt_samples;
  // Horizon 5 on part of the corpus covers the upper end of the allowed horizon.
  const CorpusRanges ranges;
  for (int i = 0; i < 20; ++i) {
    Scenario sc = generate_corpus_scenario(ranges, 606, i);
    apply_capacity_reduction(sc, 30.0);
    EngineConfig cfg;
    cfg.horizon = 5;
    cfg.record_timeseries = false;
    for (const auto& t : run_experiment(sc, cfg).timings)
      if (t.step == "dt_select") samples.push_back(t);
  }
  std::vector<double> total;
  int max_templates = 0;
  for (const auto& t : samples) {
    if (t.size > 25) continue;
    max_templates = std::max(max_templates, t.size);
    total.push_back(t.modeling_ms + t.solving_ms);
  }
  if (total.empty()) {
    verdict(8, false, "runtime envelope: no DT-Select samples");
    return;
  }
  const double p50 = percentile(total, 50);
  std::printf("     DT-Select modeling+solving ms over %zu samples (<= %d templates): p10 %.4f p50 %.4f p90 %.4f "
              "p99 %.4f p99.9 %.4f max %.4f, below 128 ms %.4f%%\n",
              total.size(), max_templates, percentile(total, 10), p50, percentile(total, 90), percentile(total, 99),
              percentile(total, 99.9), percentile(total, 100), 100.0 * ecdf_at(total, 128.0));
  verdict(8, p50 < 150.0,
          "runtime envelope: median DT-Select sample " + fmt("%.4f ms", p50) + " (limit 150 ms), " +
              std::to_string(total.size()) + " samples, horizons 3 and 5");
}

// ---- 9

void criterion_determinism() {
  const CorpusRanges ranges;
  std::string first_runs, first_ts;
  int diffs = 0;
  for (int rep = 0; rep < 20; ++rep) {
    Scenario sc = generate_corpus_scenario(ranges, 909, 3);
    apply_capacity_reduction(sc, 30.0);
    std::ostringstream runs, ts;
    std::vector<ExperimentKey> keys;
    std::vector<RunReport> reports;
    for (Algorithm alg : {Algorithm::kHeuristic, Algorithm::kGreedy}) {
      EngineConfig cfg;
      cfg.algorithm = alg;
      const RunResult r = run_experiment(sc, cfg);
      keys.push_back({static_cast<int>(keys.size()), "corpus-00003", sc.seed, 30.0});
      reports.push_back(r.report);
      write_timeseries_csv(ts, r.timeseries);
    }
    write_runs_csv(runs, keys, reports);
    if (rep == 0) {
      first_runs = runs.str();
      first_ts = ts.str();
    } else {
      diffs += (runs.str() != first_runs) + (ts.str() != first_ts);
    }
  }
  verdict(9, diffs == 0,
          "determinism: 20 repeats of generate+run (heuristic, greedy), " + std::to_string(diffs) +
              " differing metric CSVs");
}

}  // namespace

int main() {
  criterion_cover_set();
  criterion_knapsack();
  criterion_sandwich();
  criterion_coefficients();
  criterion_conservation();
  double corpus_seconds = 0.0;
  const CorpusRuns corpus = run_corpus(&corpus_seconds);
  criterion_failure_shape(corpus, corpus_seconds);
  criterion_baseline(corpus);
  criterion_runtime(corpus);
  criterion_determinism();
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
