#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fdsim/dt_select.hpp"
#include "fdsim/rs_alloc.hpp"
#include "fdsim/scenario.hpp"
#include "fdsim/stats.hpp"
#include "fdsim/templates.hpp"

namespace fdsim {

enum class Algorithm { kHeuristic, kExact, kGreedy };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kHeuristic: return "heuristic";
    case Algorithm::kExact: return "exact";
    case Algorithm::kGreedy: return "greedy";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "heuristic") return Algorithm::kHeuristic;
  if (s == "exact" || s == "exact-baseline") return Algorithm::kExact;
  if (s == "greedy") return Algorithm::kGreedy;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

enum class FailureNormalization { kRuleSlots, kRuleCount };

// One DT-Select evaluation, handed to EngineConfig::observer.
struct DtObservation {
  Slot period = 0;
  SwitchId sw = 0;
  const DtProblem* problem = nullptr;
  const std::vector<DtCoefficients>* coefficients = nullptr;
  const DtSelection* selection = nullptr;
};

struct EngineConfig {
  Algorithm algorithm = Algorithm::kHeuristic;
  int horizon = 3;
  CostWeights weights;
  GreedyThresholds greedy;
  RsConfig rs;
  FailureNormalization failure_normalization = FailureNormalization::kRuleSlots;
  std::chrono::milliseconds dt_budget{10'000};
  bool record_timeseries = true;
  bool verify = false;  // independent census and capacity check every slot
  std::function<void(const DtObservation&)> observer;

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (algorithm == Algorithm::kExact && horizon > kExactMaxHorizon)
      throw std::invalid_argument("exact baseline supports a horizon of at most 5 slots");
  }
};

struct SlotRecord {
  Slot slot = 0;
  SwitchId sw = 0;
  int utilization = 0;
  int relocated = 0;
  int hosted = 0;
  int aggregation = 0;
  int backflow = 0;
  int bs_rules = 0;
};

struct TimingSample {
  Slot period = 0;
  SwitchId sw = -1;  // -1 for the global RS-Alloc step
  std::string step;  // "dt_select" or "rs_alloc"
  int size = 0;      // templates or jobs
  double modeling_ms = 0.0;
  double solving_ms = 0.0;
};

struct RunReport {
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::kHeuristic;
  int horizon = 0;
  int slots = 0;
  int bottlenecked_switches = 0;
  double capacity_reduction = 0.0;  // percent
  double failure_rate = 0.0;        // percent
  double failure_rate_relocated = 0.0;  // percent of relocated rule-slots
  double table_overhead = 0.0;
  double link_overhead = 0.0;
  double ctrl_overhead = 0.0;  // mean messages per slot
  double ctrl_p50 = 0.0;
  double ctrl_p90 = 0.0;
  double ctrl_max = 0.0;
  long long total_rule_slots = 0;
  long long relocated_rule_slots = 0;
  long long bs_rule_slots = 0;
  long long overflow_rule_slots = 0;
  long long ctrl_messages = 0;
  int dt_select_calls = 0;
  int rs_alloc_calls = 0;
  int infeasible_selections = 0;
  int exact_fallbacks = 0;
  int downgraded_jobs = 0;
  int truncated_allocations = 0;  // RS-Alloc solves stopped by the node limit
  // One-way detour bits from the state and from the applied first-slot w^Link terms.
  double link_bits_state = 0.0;
  double link_bits_coefficients = 0.0;
  long long census_violations = 0;
  long long capacity_violations = 0;
};

struct RunResult {
  RunReport report;
  std::vector<SlotRecord> timeseries;
  std::vector<TimingSample> timings;
  std::vector<double> ctrl_per_slot;
};

// Percent by which the scarcest switch falls short of its peak demand.
inline double capacity_reduction(const std::vector<int>& peaks, const std::vector<int>& capacities) {
  double worst = 0.0;
  for (std::size_t s = 0; s < peaks.size(); ++s) {
    if (peaks[s] <= 0) continue;
    worst = std::max(worst, static_cast<double>(peaks[s] - capacities[s]) / peaks[s]);
  }
  return 100.0 * worst;
}

inline double capacity_reduction(const Scenario& sc) {
  return capacity_reduction(sc.peak_demand(), sc.topology.table_capacities());
}

enum class CapacityMode { kUniform, kPerSwitch };

// Sets table capacities so capacity_reduction() equals `percent` (up to rounding).
// Uniform: every switch gets (1-x) of the largest peak. Per switch: (1-x) of its own peak.
inline void apply_capacity_reduction(Scenario& sc, double percent, CapacityMode mode = CapacityMode::kUniform) {
  if (!(percent >= 0.0 && percent < 100.0)) throw std::invalid_argument("capacity reduction must lie in [0, 100)");
  const auto peaks = sc.peak_demand();
  const double f = 1.0 - percent / 100.0;
  const int top = peaks.empty() ? 0 : *std::max_element(peaks.begin(), peaks.end());
  for (std::size_t s = 0; s < peaks.size(); ++s) {
    const int base = mode == CapacityMode::kUniform ? top : peaks[s];
    sc.topology.set_table_capacity(static_cast<SwitchId>(s), static_cast<int>(std::llround(f * base)));
  }
}

// Table utilization of one switch: own resident rules plus what delegation adds.
inline int account_utilization(int own_active, int relocated, int aggregation, int backflow, int hosted) {
  const int u = own_active - relocated + aggregation + backflow + hosted;
  if (u < 0 || relocated > own_active) throw std::logic_error("negative utilization");
  return u;
}

class Engine {
 public:
  Engine(const Scenario& sc, EngineConfig cfg) : sc_(sc), cfg_(std::move(cfg)) {
    cfg_.validate();
    const int n = sc_.topology.num_switches();
    slots_ = sc_.num_slots();
    demand_ = sc_.demand();
    peaks_ = sc_.peak_demand();
    switches_.resize(static_cast<std::size_t>(n));
    const auto by_switch = sc_.rules_by_switch();
    for (SwitchId s = 0; s < n; ++s) {
      auto& sw = switches_[static_cast<std::size_t>(s)];
      const auto& own = by_switch[static_cast<std::size_t>(s)];
      std::vector<FlowRule> copy;
      std::map<RuleId, int> log;
      std::set<int> egress;
      for (const FlowRule* f : own) {
        copy.push_back(*f);
        if (f->reactive && f->ingress_port) log[f->id] = *f->ingress_port;
        if (f->egress_port >= 0) egress.insert(f->egress_port);
      }
      const int ports = sc_.topology.port_count(s);
      const TemplateSet ts = derive_templates(s, ports, copy, log);
      std::unordered_map<RuleId, const FlowRule*> by_id;
      for (const FlowRule* f : own) by_id[f->id] = f;
      sw.templates.resize(ts.templates.size());
      sw.members.resize(ts.templates.size());
      for (std::size_t d = 0; d < ts.templates.size(); ++d) {
        for (RuleId id : ts.templates[d].members) {
          sw.members[d].push_back(by_id.at(id));
          home_[id] = static_cast<TemplateId>(d);
        }
        std::stable_sort(sw.members[d].begin(), sw.members[d].end(),
                         [](const FlowRule* a, const FlowRule* b) { return a->install_slot() < b->install_slot(); });
      }
      for (const FlowRule* f : own) sw.max_lifetime = std::max(sw.max_lifetime, f->end_slot() - f->install_slot());
      sw.backflow = std::min(ports, static_cast<int>(egress.size()));
      sw.bottlenecked_run = peaks_[static_cast<std::size_t>(s)] > sc_.topology.table_capacity(s);
    }
  }

  const Scenario& scenario() const { return sc_; }
  Slot num_slots() const { return slots_; }
  int backflow_rules(SwitchId s) const { return switches_[static_cast<std::size_t>(s)].backflow; }

  // Where the relocated rules of template d of switch s currently live; -1 if not selected.
  SwitchId remote_of(SwitchId s, TemplateId d) const {
    const auto& st = switches_[static_cast<std::size_t>(s)].templates[static_cast<std::size_t>(d)];
    return st.selected ? st.remote : -1;
  }
  bool selected(SwitchId s, TemplateId d) const {
    return switches_[static_cast<std::size_t>(s)].templates[static_cast<std::size_t>(d)].selected;
  }
  const std::vector<const FlowRule*>& relocated(SwitchId s, TemplateId d) const {
    return switches_[static_cast<std::size_t>(s)].templates[static_cast<std::size_t>(d)].relocated;
  }
  int template_count(SwitchId s) const { return static_cast<int>(switches_[static_cast<std::size_t>(s)].templates.size()); }

  // Decide and apply one optimization period, then account slot t.
  void run_period(Slot t) {
    prune(t);
    decide(t);
    account(t);
  }

  RunResult run() {
    for (Slot t = 0; t < slots_; ++t) run_period(t);
    return finish();
  }

  RunResult finish() {
    RunReport& r = result_.report;
    r.seed = sc_.seed;
    r.algorithm = cfg_.algorithm;
    r.horizon = cfg_.horizon;
    r.slots = slots_;
    r.capacity_reduction = capacity_reduction(peaks_, sc_.topology.table_capacities());
    int nb = 0;
    for (const auto& sw : switches_) nb += sw.bottlenecked_run ? 1 : 0;
    r.bottlenecked_switches = nb;
    if (cfg_.failure_normalization == FailureNormalization::kRuleSlots) {
      r.failure_rate = r.total_rule_slots > 0
                           ? 100.0 * static_cast<double>(r.bs_rule_slots + r.overflow_rule_slots) / r.total_rule_slots
                           : 0.0;
    } else {
      r.failure_rate = sc_.rules.empty() ? 0.0 : 100.0 * static_cast<double>(bs_rules_seen_.size()) / sc_.rules.size();
    }
    r.failure_rate_relocated =
        r.relocated_rule_slots > 0 ? 100.0 * static_cast<double>(r.bs_rule_slots) / r.relocated_rule_slots : 0.0;
    const double denom = static_cast<double>(nb) * std::max<Slot>(slots_, 1);
    r.table_overhead = nb > 0 ? agg_bneck_ / denom : 0.0;
    r.link_overhead = nb > 0 ? 2.0 * link_bneck_ / denom : 0.0;
    auto& c = result_.ctrl_per_slot;
    if (!c.empty()) {
      r.ctrl_overhead = mean(c);
      r.ctrl_p50 = percentile(c, 50);
      r.ctrl_p90 = percentile(c, 90);
      r.ctrl_max = *std::max_element(c.begin(), c.end());
    }
    return result_;
  }

 private:
  struct TemplateState {
    bool selected = false;
    SwitchId remote = -1;
    std::vector<const FlowRule*> relocated;  // H^F, active rules only
  };
  struct SwitchState {
    std::vector<TemplateState> templates;             // index = template id, 0 is d0
    std::vector<std::vector<const FlowRule*>> members;  // sorted by install slot
    int backflow = 0;
    Slot max_lifetime = 0;  // longest install-to-end span, in slots
    bool bottlenecked_run = false;
  };
  // A selection decided this period, per horizon slot.
  struct Decision {
    SwitchId sw = 0;
    TemplateId d = 0;
    std::vector<int> sel;
    bool migrate = false;  // greedy: move the already active cover set too
    std::vector<int> table;
    std::vector<double> link;
    double link_coeff_first = 0.0;
    bool has_coeff = false;
  };

  int demand_at(SwitchId s, Slot t) const {
    if (t < 0 || t >= slots_) return 0;
    return demand_[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
  }

  int capacity(SwitchId s) const { return sc_.topology.table_capacity(s); }

  std::pair<std::vector<const FlowRule*>::const_iterator, std::vector<const FlowRule*>::const_iterator> installs(
      const SwitchState& sw, TemplateId d, Slot from, Slot to) const {
    const auto& m = sw.members[static_cast<std::size_t>(d)];
    auto lo = std::lower_bound(m.begin(), m.end(), from, [](const FlowRule* f, Slot v) { return f->install_slot() < v; });
    auto hi = std::lower_bound(lo, m.end(), to, [](const FlowRule* f, Slot v) { return f->install_slot() < v; });
    return {lo, hi};
  }

  void prune(Slot t) {
    for (auto& sw : switches_) {
      for (auto& ts : sw.templates) {
        std::erase_if(ts.relocated, [t](const FlowRule* f) { return !f->active_in(t); });
      }
    }
  }

  // Rules the decision would keep relocated in each horizon slot.
  void predict(const SwitchState& sw, Decision& dec, Slot t) const {
    const auto& ts = sw.templates[static_cast<std::size_t>(dec.d)];
    const int h = cfg_.horizon;
    dec.table.assign(static_cast<std::size_t>(h), 0);
    dec.link.assign(static_cast<std::size_t>(h), 0.0);
    std::vector<const FlowRule*> carried;
    for (int k = 0; k < h; ++k) {
      const Slot tk = t + k;
      if (!dec.sel[static_cast<std::size_t>(k)]) {
        carried.clear();
        continue;
      }
      if (k == 0) {
        if (ts.selected) carried = ts.relocated;
        else if (dec.migrate) carried = active_existing(sw, dec.d, t);
      } else if (!dec.sel[static_cast<std::size_t>(k - 1)]) {
        carried.clear();
      }
      auto [lo, hi] = installs(sw, dec.d, tk, tk + 1);
      carried.insert(carried.end(), lo, hi);
      for (const FlowRule* f : carried) {
        if (!f->active_in(tk)) continue;
        ++dec.table[static_cast<std::size_t>(k)];
        dec.link[static_cast<std::size_t>(k)] += f->bits_in_slot(tk);
      }
    }
  }

  // Active members installed before t that are not relocated yet.
  std::vector<const FlowRule*> active_existing(const SwitchState& sw, TemplateId d, Slot t) const {
    std::vector<const FlowRule*> out;
    const auto& ts = sw.templates[static_cast<std::size_t>(d)];
    std::unordered_set<RuleId> moved;
    for (const FlowRule* f : ts.relocated) moved.insert(f->id);
    auto [lo, hi] = installs(sw, d, t - sw.max_lifetime, t);
    for (auto it = lo; it != hi; ++it) {
      if ((*it)->active_in(t) && !moved.count((*it)->id)) out.push_back(*it);
    }
    return out;
  }

  bool bottlenecked_now(SwitchId s, Slot t) const {
    for (int k = 0; k < cfg_.horizon; ++k) {
      if (demand_at(s, t + k) > capacity(s)) return true;
    }
    return false;
  }

  DtProblem build_problem(SwitchId s, Slot t) const {
    const auto& sw = switches_[static_cast<std::size_t>(s)];
    DtProblem p;
    p.t1 = t;
    p.horizon = cfg_.horizon;
    p.capacity = capacity(s);
    p.backflow_reserve = sw.backflow;
    for (int k = 0; k < cfg_.horizon; ++k) p.baseline.push_back(demand_at(s, t + k));
    for (std::size_t d = 1; d < sw.templates.size(); ++d) {
      const auto& ts = sw.templates[d];
      auto [lo, hi] = installs(sw, static_cast<TemplateId>(d), t, t + cfg_.horizon);
      if (lo == hi && !ts.selected) continue;
      DtTemplateInput in;
      in.id = static_cast<TemplateId>(d);
      in.rules.assign(lo, hi);
      in.history_selected = ts.selected;
      in.history_rules = ts.relocated;
      p.templates.push_back(std::move(in));
    }
    return p;
  }

  std::vector<Decision> select_heuristic(SwitchId s, Slot t) {
    using Clock = std::chrono::steady_clock;
    auto t0 = Clock::now();
    const DtProblem p = build_problem(s, t);
    std::vector<DtCoefficients> coeffs;
    for (const auto& d : p.templates) coeffs.push_back(compute_coefficients(d, p.t1, p.horizon));
    const double prep = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    const DtSelection sel = solve_heuristic(p, coeffs, cfg_.weights, cfg_.dt_budget);
    record_dt(s, t, static_cast<int>(p.templates.size()), prep + sel.modeling_ms, sel.solving_ms, sel.feasible);
    if (cfg_.observer) cfg_.observer({t, s, &p, &coeffs, &sel});
    std::vector<Decision> out;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (std::find(sel.selected.begin(), sel.selected.end(), coeffs[i].id) == sel.selected.end()) continue;
      Decision dec;
      dec.sw = s;
      dec.d = coeffs[i].id;
      dec.sel.assign(static_cast<std::size_t>(cfg_.horizon), 1);
      dec.has_coeff = true;
      dec.link_coeff_first = coeffs[i].history_selected ? coeffs[i].link11_slot[0] : coeffs[i].link01_slot[0];
      out.push_back(std::move(dec));
    }
    return out;
  }

  std::vector<Decision> select_exact(SwitchId s, Slot t) {
    using Clock = std::chrono::steady_clock;
    auto t0 = Clock::now();
    const DtProblem p = build_problem(s, t);
    if (static_cast<int>(p.templates.size()) > kExactMaxTemplates) {
      ++result_.report.exact_fallbacks;
      return select_heuristic(s, t);
    }
    const double prep = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    const ExactSelection sel = solve_exact_baseline(p, cfg_.weights, cfg_.dt_budget);
    record_dt(s, t, static_cast<int>(p.templates.size()), prep + sel.modeling_ms, sel.solving_ms, sel.feasible);
    std::vector<Decision> out;
    for (std::size_t i = 0; i < p.templates.size(); ++i) {
      const unsigned a = sel.patterns[i];
      if (a == 0) continue;
      Decision dec;
      dec.sw = s;
      dec.d = p.templates[i].id;
      for (int k = 0; k < cfg_.horizon; ++k) dec.sel.push_back((a >> k) & 1u ? 1 : 0);
      out.push_back(std::move(dec));
    }
    return out;
  }

  std::vector<Decision> select_greedy(SwitchId s, Slot t) {
    const auto& sw = switches_[static_cast<std::size_t>(s)];
    int util = demand_at(s, t);
    int agg = 0;
    std::vector<GreedyTemplate> gt;
    for (std::size_t d = 1; d < sw.templates.size(); ++d) {
      const auto& ts = sw.templates[d];
      auto [lo, hi] = installs(sw, static_cast<TemplateId>(d), t, t + 1);
      GreedyTemplate g;
      g.id = static_cast<TemplateId>(d);
      g.selected = ts.selected;
      if (ts.selected) {
        g.cover_size = static_cast<int>(ts.relocated.size() + static_cast<std::size_t>(hi - lo));
        util -= g.cover_size;
        ++agg;
      } else {
        g.cover_size = static_cast<int>(active_existing(sw, static_cast<TemplateId>(d), t).size() +
                                        static_cast<std::size_t>(hi - lo));
      }
      gt.push_back(g);
    }
    if (agg > 0) util += agg + sw.backflow;
    const int cap = capacity(s);
    if (util > cfg_.greedy.upper * cap) {
      ++result_.report.dt_select_calls;
      ++bottlenecked_this_period_;
    }
    const auto chosen = solve_greedy(cap, util, gt, cfg_.greedy);
    std::vector<Decision> out;
    for (TemplateId d : chosen) {
      Decision dec;
      dec.sw = s;
      dec.d = d;
      dec.sel.assign(static_cast<std::size_t>(cfg_.horizon), 1);
      dec.migrate = !sw.templates[static_cast<std::size_t>(d)].selected;
      out.push_back(std::move(dec));
    }
    return out;
  }

  void record_dt(SwitchId s, Slot t, int size, double modeling, double solving, bool feasible) {
    ++result_.report.dt_select_calls;
    ++bottlenecked_this_period_;
    if (!feasible) ++result_.report.infeasible_selections;
    result_.timings.push_back({t, s, "dt_select", size, modeling, solving});
  }

  void decide(Slot t) {
    using Clock = std::chrono::steady_clock;
    const int n = sc_.topology.num_switches();
    const int h = cfg_.horizon;
    bottlenecked_this_period_ = 0;
    std::vector<Decision> decisions;
    for (SwitchId s = 0; s < n; ++s) {
      std::vector<Decision> ds;
      if (cfg_.algorithm == Algorithm::kGreedy) {
        ds = select_greedy(s, t);
      } else if (bottlenecked_now(s, t)) {
        ds = cfg_.algorithm == Algorithm::kHeuristic ? select_heuristic(s, t) : select_exact(s, t);
      }
      for (auto& d : ds) decisions.push_back(std::move(d));
    }

    auto t0 = Clock::now();
    // Own-side utilization each switch will have after its decisions.
    RsState st(sc_.topology, t, h);
    for (SwitchId s = 0; s < n; ++s)
      for (int k = 0; k < h; ++k) st.table_used[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] = demand_at(s, t + k);
    std::vector<std::vector<int>> any(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(h), 0));
    std::vector<SelectedTemplate> sel;
    for (auto& dec : decisions) {
      const auto& sw = switches_[static_cast<std::size_t>(dec.sw)];
      predict(sw, dec, t);
      for (int k = 0; k < h; ++k) {
        if (!dec.sel[static_cast<std::size_t>(k)]) continue;
        st.table_used[static_cast<std::size_t>(dec.sw)][static_cast<std::size_t>(k)] += 1 - dec.table[static_cast<std::size_t>(k)];
        any[static_cast<std::size_t>(dec.sw)][static_cast<std::size_t>(k)] = 1;
      }
      const auto& ts = sw.templates[static_cast<std::size_t>(dec.d)];
      std::optional<SwitchId> prev;
      if (ts.selected) prev = ts.remote;
      sel.push_back({dec.sw, dec.d, dec.sel, dec.table, dec.link, prev});
    }
    for (SwitchId s = 0; s < n; ++s)
      for (int k = 0; k < h; ++k)
        if (any[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)])
          st.table_used[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] += switches_[static_cast<std::size_t>(s)].backflow;
    const auto jobs = build_jobs(sel, h);
    const double prep = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    // Map (switch, template) -> chosen first-slot remote.
    std::map<std::pair<SwitchId, TemplateId>, SwitchId> first_remote;
    if (bottlenecked_this_period_ > 0 || !jobs.empty()) {
      const RsAllocResult rs = solve_rs_alloc(jobs, st, cfg_.rs);
      ++result_.report.rs_alloc_calls;
      result_.report.downgraded_jobs += rs.downgraded_jobs;
      result_.report.truncated_allocations += rs.optimal ? 0 : 1;
      result_.timings.push_back({t, -1, "rs_alloc", static_cast<int>(jobs.size()), prep + rs.modeling_ms, rs.solving_ms});
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].first != 0) continue;
        first_remote[{jobs[j].delegator, jobs[j].template_id}] = rs.chosen[j].backup ? st.backup() : rs.chosen[j].remotes[0];
      }
    }

    std::map<std::pair<SwitchId, TemplateId>, const Decision*> by_key;
    for (const auto& dec : decisions) by_key[{dec.sw, dec.d}] = &dec;
    long long ctrl = 0;
    for (SwitchId s = 0; s < n; ++s) {
      auto& sw = switches_[static_cast<std::size_t>(s)];
      for (std::size_t d = 1; d < sw.templates.size(); ++d) {
        auto& ts = sw.templates[d];
        auto it = by_key.find({s, static_cast<TemplateId>(d)});
        const bool on = it != by_key.end() && it->second->sel[0];
        if (!on) {
          if (ts.selected) {
            ctrl += 1 + static_cast<long long>(ts.relocated.size());
            ts.selected = false;
            ts.remote = -1;
            ts.relocated.clear();
          }
          continue;
        }
        const Decision& dec = *it->second;
        const SwitchId r = first_remote.at({s, static_cast<TemplateId>(d)});
        if (!ts.selected) {
          ctrl += 1;
          ts.selected = true;
          ts.relocated.clear();
          if (dec.migrate) {
            ts.relocated = active_existing(sw, static_cast<TemplateId>(d), t);
            ctrl += 2 * static_cast<long long>(ts.relocated.size());
          }
        } else if (ts.remote != r) {
          const int per_rule = ts.remote == st.backup() ? 1 : 2;
          ctrl += per_rule * static_cast<long long>(ts.relocated.size());
        }
        ts.remote = r;
        auto [lo, hi] = installs(sw, static_cast<TemplateId>(d), t, t + 1);
        ts.relocated.insert(ts.relocated.end(), lo, hi);
        ctrl += hi - lo;
        if (dec.has_coeff && r != st.backup()) result_.report.link_bits_coefficients += dec.link_coeff_first;
      }
    }
    result_.report.ctrl_messages += ctrl;
    result_.ctrl_per_slot.push_back(static_cast<double>(ctrl));
  }

  void account(Slot t) {
    const int n = sc_.topology.num_switches();
    const SwitchId bs = sc_.backup_switch();
    std::vector<int> hosted(static_cast<std::size_t>(n), 0), reloc(static_cast<std::size_t>(n), 0),
        agg(static_cast<std::size_t>(n), 0), bsr(static_cast<std::size_t>(n), 0);
    std::vector<double> bits(static_cast<std::size_t>(n), 0.0);
    std::map<std::pair<SwitchId, SwitchId>, double> link;
    for (SwitchId s = 0; s < n; ++s) {
      const auto& sw = switches_[static_cast<std::size_t>(s)];
      for (const auto& ts : sw.templates) {
        if (!ts.selected) continue;
        ++agg[static_cast<std::size_t>(s)];
        const int cnt = static_cast<int>(ts.relocated.size());
        reloc[static_cast<std::size_t>(s)] += cnt;
        if (ts.remote == bs) {
          bsr[static_cast<std::size_t>(s)] += cnt;
          if (cfg_.failure_normalization == FailureNormalization::kRuleCount)
            for (const FlowRule* f : ts.relocated) bs_rules_seen_.insert(f->id);
          continue;
        }
        hosted[static_cast<std::size_t>(ts.remote)] += cnt;
        double b = 0.0;
        for (const FlowRule* f : ts.relocated) b += f->bits_in_slot(t);
        bits[static_cast<std::size_t>(s)] += b;
        link[{s, ts.remote}] += b;
        link[{ts.remote, s}] += b;
      }
    }
    RunReport& r = result_.report;
    for (SwitchId s = 0; s < n; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const auto& sw = switches_[i];
      const int own = demand_at(s, t);
      const int bf = agg[i] > 0 ? sw.backflow : 0;
      const int util = account_utilization(own, reloc[i], agg[i], bf, hosted[i]);
      const int over = std::max(0, util - capacity(s));
      r.total_rule_slots += own;
      r.relocated_rule_slots += reloc[i];
      r.bs_rule_slots += bsr[i];
      r.overflow_rule_slots += over;
      r.link_bits_state += bits[i];
      if (sw.bottlenecked_run) {
        agg_bneck_ += agg[i];
        link_bneck_ += bits[i];
      }
      if (cfg_.record_timeseries && (own > 0 || util > 0))
        result_.timeseries.push_back({t, s, util, reloc[i], hosted[i], agg[i], bf, bsr[i]});
      // Hosting must never push a remote over its table capacity.
      if (cfg_.verify && (bf > sc_.topology.port_count(s) || (hosted[i] > 0 && over > 0))) ++r.capacity_violations;
    }
    if (cfg_.verify) verify(t, hosted, bsr, link);
  }

  // Census straight from the rule list, plus capacity checks on remotes and links.
  void verify(Slot t, const std::vector<int>& hosted, const std::vector<int>& bsr,
              const std::map<std::pair<SwitchId, SwitchId>, double>& link) {
    const int n = sc_.topology.num_switches();
    std::unordered_map<RuleId, SwitchId> where;
    for (SwitchId s = 0; s < n; ++s) {
      const auto& sw = switches_[static_cast<std::size_t>(s)];
      for (std::size_t d = 0; d < sw.templates.size(); ++d) {
        for (const FlowRule* f : sw.templates[d].relocated) {
          const bool member = f->owner_switch == s && home_.at(f->id) == static_cast<TemplateId>(d);
          if (!sw.templates[d].selected || !member || !f->active_in(t) || !where.emplace(f->id, sw.templates[d].remote).second)
            ++result_.report.census_violations;
        }
      }
    }
    long long total = 0, resident = 0;
    for (const FlowRule& f : sc_.rules) {
      if (!f.active_in(t)) continue;
      ++total;
      if (!where.count(f.id)) ++resident;
    }
    long long placed = resident;
    for (int v : hosted) placed += v;
    for (int v : bsr) placed += v;
    long long expected = 0;
    for (SwitchId s = 0; s < n; ++s) expected += demand_at(s, t);
    if (placed != total || total != expected) ++result_.report.census_violations;
    for (const auto& [key, b] : link) {
      if (b > sc_.topology.link_capacity(key.first, key.second) * (1 + 1e-9)) ++result_.report.capacity_violations;
    }
  }

  const Scenario& sc_;
  EngineConfig cfg_;
  Slot slots_ = 0;
  std::vector<std::vector<int>> demand_;
  std::vector<int> peaks_;
  std::vector<SwitchState> switches_;
  RunResult result_;
  double agg_bneck_ = 0.0;
  double link_bneck_ = 0.0;
  int bottlenecked_this_period_ = 0;
  std::unordered_set<RuleId> bs_rules_seen_;
  std::unordered_map<RuleId, TemplateId> home_;
};

inline RunResult run_experiment(const Scenario& sc, const EngineConfig& cfg) {
  Engine e(sc, cfg);
  return e.run();
}

}  // namespace fdsim
