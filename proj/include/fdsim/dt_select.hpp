#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fdsim/flow_rule.hpp"
#include "fdsim/mckp.hpp"
#include "fdsim/templates.hpp"

namespace fdsim {

// One relocatable template as seen by DT-Select in one period.
struct DtTemplateInput {
  TemplateId id = 0;
  // Candidate members; only rules installed inside the horizon contribute.
  std::vector<const FlowRule*> rules;
  bool history_selected = false;                // H^X_d
  std::vector<const FlowRule*> history_rules;   // H^F_d
};

struct DtCoefficients {
  TemplateId id = 0;
  bool history_selected = false;
  std::vector<int> u01;  // per horizon slot, cumulative new installs
  std::vector<int> u11;  // u01 plus still-active history rules
  int w_table01 = 1;
  double w_link01 = 0.0;
  double w_link11 = 0.0;
  int w_ctrl01 = 0;
  int w_ctrl10 = 0;
  int w_ctrl11 = 0;
  // Per-slot terms of w^Link; their first entries are what an applied period
  // actually moves.
  std::vector<double> link01_slot;
  std::vector<double> link11_slot;
};

inline DtCoefficients compute_coefficients(const DtTemplateInput& d, Slot t1, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must contain at least one slot");
  DtCoefficients c;
  c.id = d.id;
  c.history_selected = d.history_selected;
  const auto m = static_cast<std::size_t>(horizon);
  std::vector<int> installs(m, 0), hist_active(m, 0);
  std::vector<double> new_bits(m, 0.0), hist_bits(m, 0.0);
  for (const FlowRule* f : d.rules) {
    const Slot k = f->install_slot() - t1;
    if (k < 0 || k >= horizon) continue;
    ++installs[static_cast<std::size_t>(k)];
    new_bits[static_cast<std::size_t>(k)] += f->bits_in_slot(f->install_slot());
  }
  if (d.history_selected) {
    for (const FlowRule* f : d.history_rules) {
      for (std::size_t k = 0; k < m; ++k) {
        const Slot t = t1 + static_cast<Slot>(k);
        if (!f->active_in(t)) continue;
        ++hist_active[k];
        hist_bits[k] += f->bits_in_slot(t);
      }
    }
  }
  int cum = 0;
  int total_installs = 0;
  for (std::size_t k = 0; k < m; ++k) {
    cum += installs[k];
    total_installs += installs[k];
    c.u01.push_back(cum);
    c.u11.push_back(cum + hist_active[k]);
    c.w_link01 += new_bits[k];
    c.w_link11 += new_bits[k] + hist_bits[k];
    c.link01_slot.push_back(new_bits[k]);
    c.link11_slot.push_back(new_bits[k] + hist_bits[k]);
  }
  c.w_ctrl01 = 1 + total_installs;
  c.w_ctrl10 = 1 + hist_active[0];
  c.w_ctrl11 = total_installs;
  if (!d.history_selected) {
    c.u11 = c.u01;
    c.link11_slot = c.link01_slot;
  }
  return c;
}

struct CostWeights {
  double table = 1.0;
  double link = 1.0;
  double ctrl = 1.0;
  bool normalize = false;  // divide each class by its largest coefficient
};

// Effective per-class multipliers after optional max-normalization.
struct CostScale {
  double table = 1.0, link = 1.0, ctrl = 1.0;

  static CostScale from(const CostWeights& w, const std::vector<DtCoefficients>& coeffs) {
    CostScale s{w.table, w.link, w.ctrl};
    if (!w.normalize) return s;
    double mt = 0, ml = 0, mc = 0;
    for (const auto& c : coeffs) {
      mt = std::max(mt, static_cast<double>(c.w_table01));
      ml = std::max({ml, c.w_link01, c.w_link11});
      mc = std::max({mc, static_cast<double>(c.w_ctrl01), static_cast<double>(c.w_ctrl10),
                     static_cast<double>(c.w_ctrl11)});
    }
    if (mt > 0) s.table /= mt;
    if (ml > 0) s.link /= ml;
    if (mc > 0) s.ctrl /= mc;
    return s;
  }
};

struct DtProblem {
  Slot t1 = 0;
  int horizon = 1;
  int capacity = 0;
  // Predicted table utilization per horizon slot if nothing were delegated
  // (all own rules resident). Hosting for other switches is decided later by
  // RS-Alloc against the post-selection utilization.
  std::vector<int> baseline;
  // Backflow rules reserved while delegating.
  int backflow_reserve = 0;
  std::vector<DtTemplateInput> templates;  // relocatable templates only

  std::vector<double> knapsack_capacity() const {
    if (static_cast<int>(baseline.size()) != horizon) throw std::invalid_argument("baseline must cover the horizon");
    std::vector<double> cap;
    for (int b : baseline) cap.push_back(static_cast<double>(capacity - backflow_reserve - b));
    return cap;
  }
};

struct DtSelection {
  std::vector<TemplateId> selected;
  std::vector<int> predicted_utilization;  // per horizon slot
  std::vector<int> residual_overflow;      // per horizon slot
  double objective = 0.0;
  bool feasible = true;
  bool solver_optimal = true;
  double modeling_ms = 0.0;
  double solving_ms = 0.0;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Item 0 keeps the template unselected in t1, item 1 selects it.
inline std::vector<MckpItem> heuristic_items(const DtCoefficients& c, const CostScale& s) {
  const std::size_t m = c.u01.size();
  MckpItem off{0.0, std::vector<double>(m, 0.0)};
  MckpItem on{0.0, std::vector<double>(m, 0.0)};
  const auto& u = c.history_selected ? c.u11 : c.u01;
  for (std::size_t k = 0; k < m; ++k) on.weights[k] = -(u[k] - 1.0);
  if (c.history_selected) {
    off.cost = s.ctrl * c.w_ctrl10;
    on.cost = s.link * c.w_link11 + s.ctrl * c.w_ctrl11;
  } else {
    on.cost = s.table * c.w_table01 + s.link * c.w_link01 + s.ctrl * c.w_ctrl01;
  }
  return {off, on};
}

}  // namespace detail

inline MckpInstance build_heuristic_instance(const DtProblem& p, const std::vector<DtCoefficients>& coeffs,
                                             const CostWeights& w) {
  const CostScale s = CostScale::from(w, coeffs);
  MckpInstance inst;
  inst.capacity = p.knapsack_capacity();
  for (const auto& c : coeffs) inst.choice_sets.push_back(detail::heuristic_items(c, s));
  return inst;
}

namespace detail {

// Utilization of the switch per horizon slot if `chosen` (0/1 per template) is applied.
inline std::vector<int> predicted_utilization(const DtProblem& p, const std::vector<DtCoefficients>& coeffs,
                                              const std::vector<int>& chosen) {
  std::vector<int> util(p.baseline.begin(), p.baseline.end());
  bool any = false;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (chosen[i] != 1) continue;
    any = true;
    const auto& u = coeffs[i].history_selected ? coeffs[i].u11 : coeffs[i].u01;
    for (std::size_t k = 0; k < util.size(); ++k) util[k] -= u[k] - 1;
  }
  if (any)
    for (int& v : util) v += p.backflow_reserve;
  return util;
}

// The knapsack reserves backflow for every selection, including the empty one,
// which installs nothing. Selecting nothing is valid whenever the baseline fits.
inline bool baseline_fits(const DtProblem& p) {
  return std::all_of(p.baseline.begin(), p.baseline.end(), [&](int b) { return b <= p.capacity; });
}

inline int total_overflow(const DtProblem& p, const std::vector<int>& util) {
  int o = 0;
  for (int v : util) o += std::max(0, v - p.capacity);
  return o;
}

// No selection fits: minimize the summed overflow first, then the cost. The
// knapsack gets one slack choice set per slot whose items buy s rules of
// capacity at a price above any template cost. Selecting nothing is compared
// separately because it needs no backflow reserve.
inline std::vector<int> least_overflow(const DtProblem& p, const std::vector<DtCoefficients>& coeffs,
                                       const MckpInstance& inst, std::chrono::milliseconds budget) {
  const std::size_t n = inst.choice_sets.size();
  const std::size_t m = inst.capacity.size();
  MckpInstance relaxed = inst;
  double big = 1.0;
  for (const auto& set : inst.choice_sets) {
    double worst = 0.0;
    for (const auto& it : set) worst = std::max(worst, std::abs(it.cost));
    big += worst;
  }
  for (std::size_t k = 0; k < m; ++k) {
    double need = std::max(0.0, -inst.capacity[k]);
    for (const auto& set : inst.choice_sets) {
      double worst = 0.0;
      for (const auto& it : set) worst = std::max(worst, it.weights[k]);
      need += worst;
    }
    std::vector<MckpItem> slack;
    for (int v = 0; v <= static_cast<int>(std::ceil(need)); ++v) {
      MckpItem it{big * v, std::vector<double>(m, 0.0)};
      it.weights[k] = -v;
      slack.push_back(std::move(it));
    }
    relaxed.choice_sets.push_back(std::move(slack));
  }
  std::vector<int> none(n, 0);
  MckpSolution sol = solve_exact(relaxed, budget);
  if (!sol.feasible) return std::vector<int>(n, 1);
  std::vector<int> pick(sol.chosen.begin(), sol.chosen.begin() + static_cast<std::ptrdiff_t>(n));
  const int o_pick = total_overflow(p, predicted_utilization(p, coeffs, pick));
  const int o_none = total_overflow(p, predicted_utilization(p, coeffs, none));
  if (o_none < o_pick || (o_none == o_pick && selection_cost(inst, none) <= selection_cost(inst, pick))) return none;
  return pick;
}

}  // namespace detail

// Two-dimensional heuristic: one keep/select decision per template, taken in
// t1 and held across the horizon; constraints checked in every slot.
inline DtSelection solve_heuristic(const DtProblem& p, const std::vector<DtCoefficients>& coeffs,
                                   const CostWeights& w = {},
                                   std::chrono::milliseconds budget = std::chrono::milliseconds(10'000)) {
  using detail::Clock;
  auto t0 = Clock::now();
  const MckpInstance inst = build_heuristic_instance(p, coeffs, w);
  DtSelection out;
  out.modeling_ms = detail::ms_since(t0);

  t0 = Clock::now();
  MckpSolution sol = solve_exact(inst, budget);
  out.solving_ms = detail::ms_since(t0);

  t0 = Clock::now();
  const std::vector<int> none(inst.choice_sets.size(), 0);
  if (detail::baseline_fits(p) &&
      (!sol.feasible || selection_cost(inst, none) < selection_cost(inst, sol.chosen))) {
    sol.feasible = true;
    sol.chosen = none;
  }
  out.feasible = sol.feasible;
  out.solver_optimal = sol.optimal;
  if (!sol.feasible) {
    t0 = Clock::now();
    sol.chosen = detail::least_overflow(p, coeffs, inst, budget);
    out.solving_ms += detail::ms_since(t0);
    t0 = Clock::now();
  }
  out.objective = selection_cost(inst, sol.chosen);
  out.predicted_utilization = detail::predicted_utilization(p, coeffs, sol.chosen);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (sol.chosen[i] == 1) out.selected.push_back(coeffs[i].id);
  }
  for (int v : out.predicted_utilization) out.residual_overflow.push_back(std::max(0, v - p.capacity));
  out.modeling_ms += detail::ms_since(t0);
  return out;
}

// ---------------------------------------------------------------- exact baseline

// Coefficients of one per-slot select/unselect pattern, obtained by replaying
// the pattern against the template's rules.
struct PatternCoefficients {
  std::vector<int> u;        // relocated rules credited per slot
  std::vector<int> active;   // 1 where the pattern selects the template
  int table = 0;
  double link = 0.0;
  int ctrl = 0;
};

inline PatternCoefficients replay_pattern(const DtTemplateInput& d, Slot t1, int horizon, unsigned pattern) {
  PatternCoefficients pc;
  const auto m = static_cast<std::size_t>(horizon);
  pc.u.assign(m, 0);
  pc.active.assign(m, 0);
  bool prev = d.history_selected;
  bool from_history = d.history_selected;  // current run still carries H^F
  int run_new = 0;                         // cumulative new relocations in the current run
  std::vector<const FlowRule*> run_rules;  // relocated in the current run (for returns)
  if (from_history) run_rules = d.history_rules;
  for (std::size_t k = 0; k < m; ++k) {
    const Slot t = t1 + static_cast<Slot>(k);
    const bool on = (pattern >> k) & 1u;
    if (on) {
      if (!prev) {
        pc.table += 1;
        pc.ctrl += 1;
        from_history = false;
        run_new = 0;
        run_rules.clear();
      }
      for (const FlowRule* f : d.rules) {
        if (f->install_slot() != t) continue;
        ++run_new;
        ++pc.ctrl;
        pc.link += f->bits_in_slot(t);
        run_rules.push_back(f);
      }
      int hist = 0;
      if (from_history) {
        for (const FlowRule* f : d.history_rules) {
          if (!f->active_in(t)) continue;
          ++hist;
          pc.link += f->bits_in_slot(t);
        }
      }
      pc.u[k] = run_new + hist;
      pc.active[k] = 1;
    } else if (prev) {
      pc.ctrl += 1;
      for (const FlowRule* f : run_rules) pc.ctrl += f->active_in(t) ? 1 : 0;
      run_rules.clear();
      from_history = false;
      run_new = 0;
    }
    prev = on;
  }
  return pc;
}

struct ExactSelection {
  std::vector<unsigned> patterns;  // per template, bit k = selected in slot t1+k
  std::vector<TemplateId> selected_first;
  double objective = 0.0;
  bool feasible = true;
  bool solver_optimal = true;
  double modeling_ms = 0.0;
  double solving_ms = 0.0;
};

inline constexpr int kExactMaxTemplates = 14;
inline constexpr int kExactMaxHorizon = 5;

inline MckpInstance build_exact_instance(const DtProblem& p, const CostScale& s) {
  if (static_cast<int>(p.templates.size()) > kExactMaxTemplates || p.horizon > kExactMaxHorizon)
    throw std::length_error("exact DT-Select baseline limited to 14 templates and a horizon of 5 slots");
  MckpInstance inst;
  inst.capacity = p.knapsack_capacity();
  const unsigned n_patterns = 1u << p.horizon;
  for (const auto& d : p.templates) {
    std::vector<MckpItem> items;
    for (unsigned a = 0; a < n_patterns; ++a) {
      const PatternCoefficients pc = replay_pattern(d, p.t1, p.horizon, a);
      MckpItem it;
      it.cost = s.table * pc.table + s.link * pc.link + s.ctrl * pc.ctrl;
      for (int k = 0; k < p.horizon; ++k) it.weights.push_back(-(pc.u[k] - pc.active[k]));
      items.push_back(std::move(it));
    }
    inst.choice_sets.push_back(std::move(items));
  }
  return inst;
}

// Multi-period assignment formulation with 2^|T| patterns per template.
inline ExactSelection solve_exact_baseline(const DtProblem& p, const CostWeights& w = {},
                                           std::chrono::milliseconds budget = std::chrono::milliseconds(10'000)) {
  using detail::Clock;
  auto t0 = Clock::now();
  std::vector<DtCoefficients> coeffs;
  for (const auto& d : p.templates) coeffs.push_back(compute_coefficients(d, p.t1, p.horizon));
  const MckpInstance inst = build_exact_instance(p, CostScale::from(w, coeffs));
  ExactSelection out;
  out.modeling_ms = detail::ms_since(t0);
  t0 = Clock::now();
  MckpSolution sol = solve_exact(inst, budget);
  out.solving_ms = detail::ms_since(t0);
  const std::vector<int> none(inst.choice_sets.size(), 0);
  if (detail::baseline_fits(p) &&
      (!sol.feasible || selection_cost(inst, none) < selection_cost(inst, sol.chosen))) {
    sol.feasible = true;
    sol.chosen = none;
  }
  out.feasible = sol.feasible;
  out.solver_optimal = sol.optimal;
  const unsigned all = (1u << p.horizon) - 1u;
  if (!sol.feasible) sol.chosen.assign(inst.choice_sets.size(), static_cast<int>(all));
  out.objective = selection_cost(inst, sol.chosen);
  for (std::size_t i = 0; i < sol.chosen.size(); ++i) {
    const auto a = static_cast<unsigned>(sol.chosen[i]);
    out.patterns.push_back(a);
    if (a & 1u) out.selected_first.push_back(p.templates[i].id);
  }
  return out;
}

// ---------------------------------------------------------------- greedy

struct GreedyThresholds {
  double upper = 0.95;
  double lower = 0.80;
};

struct GreedyTemplate {
  TemplateId id = 0;
  int cover_size = 0;  // rules the template would carry (or carries) in the current slot
  bool selected = false;
};

// Threshold baseline: above upper*c, select unselected templates by descending
// cover-set size until utilization drops below upper*c; below lower*c, return
// selected templates (smallest first) while utilization stays below lower*c.
// Each selected template frees cover_size - 1 rules (its aggregation rule
// stays behind).
inline std::vector<TemplateId> solve_greedy(int capacity, int utilization, std::vector<GreedyTemplate> templates,
                                            const GreedyThresholds& th = {}) {
  if (th.upper < th.lower) throw std::invalid_argument("greedy: upper threshold below lower threshold");
  const double hi = th.upper * capacity, lo = th.lower * capacity;
  double util = utilization;
  if (util > hi) {
    std::vector<GreedyTemplate*> cand;
    for (auto& t : templates) {
      if (!t.selected && t.cover_size > 1) cand.push_back(&t);
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const GreedyTemplate* a, const GreedyTemplate* b) { return a->cover_size > b->cover_size; });
    for (GreedyTemplate* t : cand) {
      if (util < hi) break;
      t->selected = true;
      util -= t->cover_size - 1;
    }
  } else if (util < lo) {
    std::vector<GreedyTemplate*> sel;
    for (auto& t : templates) {
      if (t.selected) sel.push_back(&t);
    }
    std::stable_sort(sel.begin(), sel.end(),
                     [](const GreedyTemplate* a, const GreedyTemplate* b) { return a->cover_size < b->cover_size; });
    for (GreedyTemplate* t : sel) {
      if (util + (t->cover_size - 1) >= lo) break;
      t->selected = false;
      util += t->cover_size - 1;
    }
  }
  std::vector<TemplateId> out;
  for (const auto& t : templates) {
    if (t.selected) out.push_back(t.id);
  }
  return out;
}

}  // namespace fdsim
